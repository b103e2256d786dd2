//! Quadrature building blocks: Gauss-Kronrod 10/21 panels, tanh-sinh panels for
//! endpoint singularities, Gauss-Legendre nodes, and a globally adaptive driver.

use num_complex::Complex64;

const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of integrating one panel.
#[derive(Debug, Clone, Copy)]
pub struct PanelEstimate {
    pub value: Complex64,
    pub error: f64,
    /// Integral of |f| over the panel.
    pub abs_value: f64,
}

/// 21-point Kronrod rule with the embedded 10-point Gauss rule as error estimate.
pub fn gauss_kronrod21<F>(f: &F, a: f64, b: f64) -> PanelEstimate
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK21[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_value = fc.norm() * WGK21[10];
    for j in 0..10 {
        let dx = half * XGK21[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod += sum * WGK21[j];
        abs_value += (f1.norm() + f2.norm()) * WGK21[j];
        if j % 2 == 1 {
            gauss += sum * WG10[j / 2];
        }
    }
    let value = kronrod * half;
    let abs_value = abs_value * half.abs();
    let error = ((kronrod - gauss) * half).norm().max(50.0 * f64::EPSILON * abs_value);
    PanelEstimate { value, error, abs_value }
}

const TANH_SINH_RANGE: f64 = 5.0;
const TANH_SINH_MAX_LEVEL: u32 = 8;

/// Tanh-sinh rule on [a, b], robust to integrable singularities at either end.
///
/// Nodes are placed by their distance to the nearest endpoint so that points
/// closer than ulp(a) to a singular endpoint are still resolved.
pub fn tanh_sinh<F>(f: &F, a: f64, b: f64) -> PanelEstimate
where
    F: Fn(f64) -> Complex64,
{
    let width = b - a;
    let term = |x: f64| -> (Complex64, f64) {
        let u = std::f64::consts::FRAC_PI_2 * x.sinh();
        // distances to a and b: width * sigma(2u), width * sigma(-2u)
        let e = (-2.0 * u.abs()).exp();
        let small = width * e / (1.0 + e);
        let large = width / (1.0 + e);
        let (da, db) = if u < 0.0 { (small, large) } else { (large, small) };
        let omega = if da <= db { a + da } else { b - db };
        let jac = width * std::f64::consts::PI * x.cosh() * e / ((1.0 + e) * (1.0 + e));
        if jac == 0.0 || omega <= a || omega >= b {
            return (Complex64::new(0.0, 0.0), 0.0);
        }
        let v = f(omega);
        (v * jac, v.norm() * jac)
    };

    let mut h = 1.0;
    let (mut sum, mut abs_sum) = term(0.0);
    let n0 = TANH_SINH_RANGE as i64;
    for k in 1..=n0 {
        let x = k as f64;
        let (p, pa) = term(x);
        let (m, ma) = term(-x);
        sum += p + m;
        abs_sum += pa + ma;
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 1..=TANH_SINH_MAX_LEVEL {
        h *= 0.5;
        let count = (TANH_SINH_RANGE / h) as i64;
        let mut k = 1;
        while k <= count {
            let x = k as f64 * h;
            let (p, pa) = term(x);
            let (m, ma) = term(-x);
            sum += p + m;
            abs_sum += pa + ma;
            k += 2;
        }
        let next = sum * h;
        error = (next - estimate).norm();
        estimate = next;
        if level >= 3 && error <= 1e-15 * (abs_sum * h) {
            break;
        }
    }
    let abs_value = abs_sum * h;
    PanelEstimate { value: estimate, error: error.max(50.0 * f64::EPSILON * abs_value), abs_value }
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    /// Absolute floor on the error target.
    pub abs_tol: f64,
    /// Maximum panel width; `None` for no cap.
    pub max_width: Option<f64>,
    /// Points where the initial partition is split.
    pub breakpoints: Vec<f64>,
    /// Endpoints adjacent to which panels use the tanh-sinh rule.
    pub singular_points: Vec<f64>,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_width: None,
            breakpoints: Vec::new(),
            singular_points: Vec::new(),
            max_panels: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: Complex64,
    pub error: f64,
    pub abs_value: f64,
    pub panels: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    est: PanelEstimate,
    splittable: bool,
}

/// Globally adaptive integration of a complex integrand on [a, b].
///
/// Always bisects the panel with the largest error estimate (lowest left
/// endpoint on ties), so the result depends only on the inputs.
pub fn integrate<F>(f: &F, a: f64, b: f64, opts: &AdaptiveOptions) -> AdaptiveResult
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        let zero = Complex64::new(0.0, 0.0);
        return AdaptiveResult { value: zero, error: 0.0, abs_value: 0.0, panels: 0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut edges = vec![lo, hi];
    edges.extend(opts.breakpoints.iter().chain(&opts.singular_points).copied().filter(|&p| p > lo && p < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let is_singular = |x: f64| opts.singular_points.contains(&x);
    let eval_panel = |pa: f64, pb: f64| -> Panel {
        let est = if is_singular(pa) || is_singular(pb) { tanh_sinh(f, pa, pb) } else { gauss_kronrod21(f, pa, pb) };
        let mid = 0.5 * (pa + pb);
        let splittable = mid > pa && mid < pb && (pb - pa) > 4.0 * f64::EPSILON * pa.abs().max(pb.abs());
        Panel { a: pa, b: pb, est, splittable }
    };

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        let (sa, sb) = (w[0], w[1]);
        let pieces = match opts.max_width {
            Some(cap) if cap > 0.0 && sb - sa > cap => ((sb - sa) / cap).ceil() as usize,
            _ => 1,
        };
        for k in 0..pieces {
            let pa = if k == 0 { sa } else { sa + (sb - sa) * k as f64 / pieces as f64 };
            let pb = if k + 1 == pieces { sb } else { sa + (sb - sa) * (k + 1) as f64 / pieces as f64 };
            panels.push(eval_panel(pa, pb));
        }
    }

    let mut converged = false;
    loop {
        let value: Complex64 = panels.iter().map(|p| p.est.value).sum();
        let error: f64 = panels.iter().map(|p| p.est.error).sum();
        let target = (opts.rel_tol * value.norm()).max(opts.abs_tol);
        if error <= target {
            converged = true;
            break;
        }
        if panels.len() >= opts.max_panels {
            break;
        }
        let mut worst: Option<usize> = None;
        for (i, p) in panels.iter().enumerate() {
            if !p.splittable {
                continue;
            }
            match worst {
                None => worst = Some(i),
                Some(w) => {
                    let pw = &panels[w];
                    if p.est.error > pw.est.error || (p.est.error == pw.est.error && p.a < pw.a) {
                        worst = Some(i);
                    }
                }
            }
        }
        let Some(w) = worst else { break };
        let p = panels.swap_remove(w);
        let mid = 0.5 * (p.a + p.b);
        panels.push(eval_panel(p.a, mid));
        panels.push(eval_panel(mid, p.b));
    }

    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: Complex64 = panels.iter().map(|p| p.est.value).sum();
    let error: f64 = panels.iter().map(|p| p.est.error).sum();
    let abs_value: f64 = panels.iter().map(|p| p.est.abs_value).sum();
    AdaptiveResult { value: value * sign, error, abs_value, panels: panels.len(), converged }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: &F, a: f64, b: f64, opts: &AdaptiveOptions) -> AdaptiveResult
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64| Complex64::new(f(x), 0.0);
    integrate(&g, a, b, opts)
}
