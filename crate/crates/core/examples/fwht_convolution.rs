//! Walsh-Hadamard transform round trip and XOR convolution via the spectrum.

use dyadic_walsh::random::random_grid;
use dyadic_walsh::transform::xor_convolve_direct;
use dyadic_walsh::{fwht, inverse_fwht, xor_convolve};

fn main() -> dyadic_walsh::Result<()> {
    let n = 12;
    let f = random_grid(n, 1);
    let g = random_grid(n, 2);

    let s = fwht(&f);
    let back = inverse_fwht(&s);
    println!("round trip max error   {:.3e}", back.max_abs_diff(&f)?);
    println!("Parseval  |f|_2^2 = {:.6}  sum c^2 = {:.6}", f.l2().powi(2), s.energy());

    let fast = xor_convolve(&f, &g)?;
    let slow = xor_convolve_direct(&f, &g)?;
    println!("xor convolution error  {:.3e}", fast.max_abs_diff(&slow)?);
    Ok(())
}
