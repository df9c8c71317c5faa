//! Scaling and dimension conditions for a few data, with the violating
//! subspace when the dimension condition fails.

use gausscouple::datum::{check_dimension_condition, check_scaling, Datum};
use nalgebra::DMatrix;

fn show(name: &str, datum: &Datum) {
    let dim = check_dimension_condition(datum, 200, 1).unwrap();
    println!("{name}: scaling {} dimension {:?}", check_scaling(datum), dim.verdict);
    if let Some(witness) = &dim.witness {
        let dims: Vec<usize> = witness.iter().map(|s| s.dim()).collect();
        println!("  witness dims {dims:?} ({:?}), violation {:.3}", dim.witness_kind.unwrap(), dim.violation);
    }
}

fn main() {
    let third = 1.0 / 3.0;
    let zf = Datum::from_parts(
        vec![1, 1, 1],
        vec![2.0 * third; 3],
        vec![1.0],
        vec![DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0])],
    )
    .unwrap();
    show("X + Z, Y + Z", &zf);

    let projection =
        Datum::from_parts(vec![1, 1], vec![0.5, 0.5], vec![1.0], vec![DMatrix::from_row_slice(1, 2, &[1.0, 0.0])])
            .unwrap();
    show("first coordinate", &projection);

    let off = Datum::from_parts(vec![1, 1], vec![0.6, 0.6], vec![1.0], vec![DMatrix::from_row_slice(1, 2, &[1.0, 1.0])])
        .unwrap();
    show("sum, c = 0.6", &off);
}
