//! Adaptive Gauss-Kronrod (7, 15) integration of functions that carry their
//! own error estimate.

#![allow(clippy::excessive_precision)]

use rayon::prelude::*;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value, error estimate and number of integrand calls.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Integral {
    pub value: f64,
    pub error: f64,
    pub calls: usize,
}

/// A sample of the integrand: value, its own error, and work spent.
pub(crate) type Sample = (f64, f64, usize);

fn gk15<F: Fn(f64) -> Sample + Sync>(f: &F, a: f64, b: f64, parallel: bool) -> (f64, f64, f64, usize) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let xs: Vec<f64> = (0..15)
        .map(|i| if i < 7 { c - h * XGK[i] } else if i == 7 { c } else { c + h * XGK[14 - i] })
        .collect();
    let fs: Vec<Sample> = if parallel { xs.par_iter().map(|&x| f(x)).collect() } else { xs.iter().map(|&x| f(x)).collect() };
    let (mut k, mut g, mut inner, mut calls) = (0.0, 0.0, 0.0, 0);
    for (i, &(v, e, n)) in fs.iter().enumerate() {
        let j = if i < 8 { i } else { 14 - i };
        k += WGK[j] * v;
        inner += WGK[j] * e;
        calls += n;
        if j % 2 == 1 {
            g += WG[j / 2] * v;
        }
    }
    (h * k, h * (k - g).abs(), h * inner, calls)
}

/// Integrates `f` over `[a, b]`, bisecting panels whose Kronrod-Gauss
/// difference exceeds their share `tol (b_i - a_i)/(b - a)` of the tolerance.
pub(crate) fn integrate<F: Fn(f64) -> Sample + Sync>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32, parallel: bool) -> Integral {
    let mut out = Integral::default();
    let total = b - a;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (k, e, inner, calls) = gk15(f, lo, hi, parallel);
        out.calls += calls;
        if e <= tol * (hi - lo) / total || depth >= max_depth {
            out.value += k;
            out.error += e + inner;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials_up_to_degree_22() {
        let r = integrate(&|x: f64| (x.powi(22), 0.0, 1), -1.0, 1.0, 1e-14, 0, false);
        assert!((r.value - 2.0 / 23.0).abs() < 1e-15);
        assert_eq!(r.calls, 15);
    }

    #[test]
    fn resolves_a_jump() {
        let r = integrate(&|x: f64| (if x < 0.3 { 1.0 } else { -1.0 }, 0.0, 1), -1.0, 1.0, 1e-9, 40, false);
        assert!((r.value - 0.6).abs() < 1e-9, "{r:?}");
        assert!(r.error >= (r.value - 0.6).abs());
    }

    #[test]
    fn parallel_matches_serial() {
        let f = |x: f64| (x.sin() * (-x).exp(), 0.0, 1);
        let a = integrate(&f, 0.0, 5.0, 1e-12, 20, false);
        let b = integrate(&f, 0.0, 5.0, 1e-12, 20, true);
        assert_eq!(a, b);
    }
}
