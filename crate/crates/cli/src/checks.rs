//! Self-checks: weight-count tables and the finite-difference gradient check.

use dce_core::decoder::{gradient_check, DecoderArch, DecoderParams, TABLE_MASSIVE, TABLE_SINGLE_ANTENNA};
use dce_core::numerics::{RealTensor3, RngStream};

use crate::error::{CliError, CliResult};

/// Reference weight counts, kept apart from the library tables so that a
/// change to either side shows up as a mismatch.
const EXPECTED: [(usize, [usize; 4]); 2] = [(1, [496, 1760, 6592, 25472]), (64, [1504, 3776, 10624, 33536])];

pub fn tables(which: Option<u8>) -> CliResult<()> {
    let selected: Vec<u8> = match which {
        Some(t @ (1 | 2)) => vec![t],
        Some(t) => return Err(CliError::Config(format!("table: expected 1 or 2, got {t}"))),
        None => vec![1, 2],
    };
    let mut mismatches = 0;
    for t in selected {
        let (table, (antennas, expected)) = match t {
            1 => (&TABLE_SINGLE_ANTENNA, EXPECTED[0]),
            _ => (&TABLE_MASSIVE, EXPECTED[1]),
        };
        println!("table {t} (M={antennas})");
        println!("{:>4} {:>7} {:>13} {:>9}", "k", "epochs", "weight_count", "expected");
        for (row, want) in table.iter().zip(expected) {
            let got = row.arch().weight_count();
            let flag = if got == want && row.weight_count == want { "" } else { "  MISMATCH" };
            if !flag.is_empty() {
                mismatches += 1;
            }
            println!("{:>4} {:>7} {:>13} {:>9}{flag}", row.width, row.epochs, got, want);
        }
    }
    if mismatches > 0 {
        return Err(CliError::Runtime(format!("{mismatches} weight count(s) differ from the reference tables")));
    }
    Ok(())
}

/// Named architectures for the gradient check.
pub fn gradcheck_arch(name: &str) -> CliResult<DecoderArch> {
    let arch = match name {
        // three layers, width 4, four output channels on an 8x8 grid
        "small" => DecoderArch::new(3, 4, 4, 8, 8),
        "six_layer" => DecoderArch::new(6, 4, 4, 64, 64),
        "wide" => DecoderArch::new(3, 8, 2, 16, 16),
        _ => {
            return Err(CliError::Config(format!(
                "arch: unknown gradcheck arch {name:?} (small, six_layer, wide)"
            )))
        }
    };
    Ok(arch.expect("named architectures are valid"))
}

pub fn gradcheck(arch_name: &str, tolerance: f64, seed: u64, step: f64) -> CliResult<()> {
    if !(tolerance > 0.0) || !(step > 0.0) {
        return Err(CliError::Config("tolerance and step must be positive".into()));
    }
    let arch = gradcheck_arch(arch_name)?;
    let mut rng = RngStream::new(seed, 0);
    let mut params = DecoderParams::init(&arch, &mut rng);
    // move batchnorm affine terms off (1, 0) so their gradients are exercised
    for i in 0..arch.hidden_layers {
        let g = rng.uniform(arch.width, 0.5, 1.5);
        params.gamma_mut(i).copy_from_slice(&g);
        let b = rng.uniform(arch.width, -0.3, 0.3);
        params.beta_mut(i).copy_from_slice(&b);
    }
    let (c, f, t) = arch.input_dims();
    let z0 = RealTensor3::from_vec(c, f, t, rng.uniform(c * f * t, 0.0, 0.1))?;
    let (c, f, t) = arch.output_dims();
    let target = RealTensor3::from_vec(c, f, t, rng.uniform(c * f * t, -1.0, 1.0))?;

    let r = gradient_check(&arch, &params, &z0, &target, step)?;
    println!(
        "arch {arch_name}: l={} k={} out {}x{}x{}, {} parameters",
        arch.hidden_layers, arch.width, c, f, t, r.checked
    );
    println!("max relative error {:e}", r.max_rel_error);
    if r.max_rel_error < tolerance {
        println!("gradcheck passed (tolerance {tolerance:e})");
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "gradcheck failed: worst coordinate {} ({}): analytic {:e}, numeric {:e}, relative error {:e} >= {tolerance:e}",
            r.worst_index, r.worst_name, r.analytic, r.numeric, r.max_rel_error
        )))
    }
}
