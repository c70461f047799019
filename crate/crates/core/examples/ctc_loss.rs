//! CTC loss and gradient on a tiny random problem, checked against path
//! enumeration and a finite difference.

use ctcpoly::ctc::{brute_force_ctc, ctc_loss_and_grad};
use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ctcpoly::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (t, v) = (6, 4);
    let logits = Array2::from_shape_fn((t, v), |_| rng.random_range(-2.0..2.0));
    let targets = [1, 2, 2];

    let (loss, grad) = ctc_loss_and_grad(logits.view(), &targets)?;
    let log_probs = logits.map_axis(ndarray::Axis(1), |row| {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    });
    let normalized = &logits - &log_probs.insert_axis(ndarray::Axis(1));
    let brute = brute_force_ctc(normalized.view(), &targets)?;
    println!("loss {loss:.10}, enumerated {brute:.10}");

    let h = 1e-5;
    let mut bumped = logits.clone();
    bumped[[2, 1]] += h;
    let (up, _) = ctc_loss_and_grad(bumped.view(), &targets)?;
    println!("d loss / d logit[2,1]: analytic {:.6}, numeric {:.6}", grad[[2, 1]], (up - loss) / h);
    println!("gradient rows sum to {:.2e}", grad.sum_axis(ndarray::Axis(1)).iter().map(|x| x.abs()).sum::<f64>());
    Ok(())
}
