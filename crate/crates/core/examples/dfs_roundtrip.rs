//! Decompose collective noise on three qubits, store a random qubit state
//! in the protected factor, and check the channel cannot touch it.

use wdfs_core::algebra::hermitianize;
use wdfs_core::channels::{collective_noise, decode, encode, DensityMatrix};
use wdfs_core::mat::fro_norm;
use wdfs_core::wedderburn::{decompose, Tolerances};

fn main() -> wdfs_core::Result<()> {
    let channel = collective_noise(3)?;
    let gens = hermitianize(channel.kraus(), "collective-3")?;

    let dec = decompose(&gens, 0, &Tolerances::default())?;
    for (i, c) in dec.structure.components.iter().enumerate() {
        println!("component {i}: M_{} x I_{}", c.block_size, c.multiplicity);
    }

    let ws = &dec.structure;
    let i = (0..ws.components.len())
        .find(|&i| ws.protected_dim(i) > 1)
        .expect("collective noise on three qubits protects a qubit");

    let rho = DensityMatrix::random(ws.protected_dim(i), 42);
    let encoded = encode(ws, i, &rho)?;
    let through = channel.apply(&encoded)?;
    let back = decode(ws, i, &through)?;
    assert!(fro_norm(&(back.mat() - rho.mat())) <= 1e-10);
    println!("round trip through the channel is exact");
    Ok(())
}
