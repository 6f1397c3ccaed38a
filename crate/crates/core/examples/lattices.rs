//! Exact lattice arithmetic: intersection, sum and index of sublattices of Q^2.

use qigraph::linear::{format_rational, integer_index, lattice_intersect, lattice_sum, ratio, Lattice2, Matrix2};

fn main() -> qigraph::Result<()> {
    let a = Lattice2::from_basis(&Matrix2::ints(2, 0, 0, 1))?;
    let b = Lattice2::from_basis(&Matrix2::ints(1, 1, 0, 3))?;
    let meet = lattice_intersect(&a, &b);
    let join = lattice_sum(&a, &b);
    println!("a ∩ b has basis {:?}", meet.basis().to_strings());
    println!("a + b has basis {:?}", join.basis().to_strings());
    println!("[a : a ∩ b] = {:?}", integer_index(&meet, &a));
    let half = a.scaled(&ratio(1, 2))?;
    println!("covolume of a/2 = {}", format_rational(&half.covolume()));
    Ok(())
}
