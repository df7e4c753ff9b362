//! Field file formats: binary round trip, CSV export, and the Fourier-mode
//! table of a Higgs field.

use hcsk::complexmm::FourierModes;
use hcsk::matfun::SymMatC;
use hcsk::torusfield::{
    read_matrix, read_scalar, scalar_to_csv, write_matrix, write_scalar, MatrixField, ScalarField,
    TorusGrid, TAU,
};
use num_complex::Complex64 as C64;

fn main() {
    let grid = TorusGrid::new(16).unwrap();

    let phi = ScalarField::from_fn(grid, |y| 0.01 * (TAU * y[0]).cos() * (TAU * y[1]).sin());
    let mut bytes = Vec::new();
    write_scalar(&mut bytes, &phi).unwrap();
    println!(
        "scalar field: {} nodes, file size {} bytes (20-byte header + 8 per node)",
        grid.nodes(),
        bytes.len()
    );
    let back = read_scalar(&mut bytes.as_slice()).unwrap();
    assert_eq!(phi, back);
    println!("binary round trip: exact");

    let xi = MatrixField::from_fn(grid, |y| {
        SymMatC::sym2(
            C64::new(0.2, 0.0),
            C64::new(0.1 * (TAU * y[0]).sin(), 0.0),
            C64::new(0.0, 0.05),
        )
    });
    let mut bytes = Vec::new();
    write_matrix(&mut bytes, &xi).unwrap();
    let back = read_matrix(&mut bytes.as_slice()).unwrap();
    assert_eq!(xi, back);
    println!("matrix field: file size {} bytes, round trip exact", bytes.len());

    let mut csv = String::new();
    scalar_to_csv(&phi, &mut csv);
    println!("\nCSV export, first rows (y1, y2, value):");
    for line in csv.lines().take(3) {
        println!("  {line}");
    }

    let table = FourierModes::analyze(&xi);
    let nonzero: Vec<_> = table
        .entries
        .iter()
        .filter(|(_, c)| c.iter().map(|z| z.norm()).sum::<f64>() > 1e-12)
        .collect();
    println!("\nFourier-mode table: {} nonzero modes of {}", nonzero.len(), table.entries.len());
    let mut csv = String::new();
    table.to_csv(&mut csv);
    println!("mode CSV bytes: {}", csv.len());
}
