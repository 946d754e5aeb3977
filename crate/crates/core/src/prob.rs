//! Finite probability: mass functions, joint tensors, channels.
//!
//! Everything downstream (typicality counts, rate formulas, security
//! indices) reduces to entropies of small dense tensors, so this module
//! keeps the representation flat and the arithmetic careful: sums are
//! compensated, validation is strict, and information quantities are
//! clamped at zero only within float noise.

use crate::error::{Error, Result};

/// Tolerance for mass validation: entries below `-MASS_TOL` and totals
/// further than `MASS_TOL` from one are rejected.
pub const MASS_TOL: f64 = 1e-12;

/// Compensated (Kahan) summation.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

fn entropy_bits(mass: &[f64]) -> f64 {
    let h = kahan_sum(mass.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()));
    clamp_information(h)
}

/// Entropies and mutual informations are nonnegative; tiny negative
/// results are float noise and get clamped.
fn clamp_information(v: f64) -> f64 {
    debug_assert!(v > -1e-9, "information quantity {v} below noise floor");
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Entropy of a {p, 1-p} split, in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "binary_entropy needs p in [0,1], got {p}"
        )));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

fn validate_mass(mass: &mut [f64], what: &str) -> Result<()> {
    for (i, m) in mass.iter_mut().enumerate() {
        if !m.is_finite() {
            return Err(Error::InvalidMass(format!(
                "{what}: entry {i} is not finite"
            )));
        }
        if *m < -MASS_TOL {
            return Err(Error::InvalidMass(format!(
                "{what}: entry {i} is negative ({})",
                *m
            )));
        }
        if *m < 0.0 {
            *m = 0.0;
        }
    }
    let total = kahan_sum(mass.iter().copied());
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidMass(format!(
            "{what}: total mass {total} is not 1"
        )));
    }
    Ok(())
}

/// Probability mass function on {0, .., size-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
}

impl Pmf {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidMass("pmf over empty alphabet".into()));
        }
        let mut mass = mass;
        validate_mass(&mut mass, "pmf")?;
        Ok(Pmf { mass })
    }

    /// Scales a nonnegative vector to total mass one.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let total = kahan_sum(raw.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMass(format!(
                "cannot normalize vector with total {total}"
            )));
        }
        Pmf::new(raw.into_iter().map(|x| x / total).collect())
    }

    pub fn uniform(size: usize) -> Self {
        Pmf {
            mass: vec![1.0 / size as f64; size],
        }
    }

    /// Mass {1-p, p} on {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("bernoulli needs p in [0,1], got {p}")));
        }
        Ok(Pmf {
            mass: vec![1.0 - p, p],
        })
    }

    pub fn size(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.mass)
    }

    /// Smallest nonzero mass; None for a degenerate all-zero pmf
    /// (impossible after validation).
    pub fn min_positive(&self) -> Option<f64> {
        self.mass
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

/// Total variation in the summed convention: sum_i |p_i - q_i|, in [0, 2].
pub fn variational_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.size() != q.size() {
        return Err(Error::AlphabetMismatch(format!(
            "variational distance over sizes {} and {}",
            p.size(),
            q.size()
        )));
    }
    Ok(kahan_sum(
        p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).abs()),
    ))
}

/// Dense joint distribution over a product of finite axes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    mass: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        let expect: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidMass("joint pmf with empty axis".into()));
        }
        if mass.len() != expect {
            return Err(Error::AlphabetMismatch(format!(
                "joint pmf needs {expect} entries for dims {dims:?}, got {}",
                mass.len()
            )));
        }
        let mut mass = mass;
        validate_mass(&mut mass, "joint pmf")?;
        Ok(JointPmf { dims, mass })
    }

    pub fn normalized(dims: Vec<usize>, raw: Vec<f64>) -> Result<Self> {
        let total = kahan_sum(raw.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMass(format!(
                "cannot normalize tensor with total {total}"
            )));
        }
        JointPmf::new(dims, raw.into_iter().map(|x| x / total).collect())
    }

    /// Builds entries from a function of the multi-index.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(dims: Vec<usize>, mut f: F) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut mass = Vec::with_capacity(total);
        for _ in 0..total {
            mass.push(f(&idx));
            increment_index(&mut idx, &dims);
        }
        JointPmf::new(dims, mass)
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (i, &d) in self.dims.iter().enumerate() {
            debug_assert!(idx[i] < d);
            flat = flat * d + idx[i];
        }
        flat
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.mass[self.flat_index(idx)]
    }

    /// Marginal onto the given axes (strictly increasing), axes keeping
    /// their relative order.
    pub fn marginal_onto(&self, keep: &[usize]) -> JointPmf {
        assert!(
            keep.windows(2).all(|w| w[0] < w[1]) && keep.iter().all(|&a| a < self.dims.len()),
            "marginal axes must be strictly increasing and in range"
        );
        let out_dims: Vec<usize> = keep.iter().map(|&a| self.dims[a]).collect();
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut idx = vec![0usize; self.dims.len()];
        for &m in &self.mass {
            let mut r = 0usize;
            for (t, &a) in keep.iter().enumerate() {
                r = r * out_dims[t] + idx[a];
            }
            out[r] += m;
            increment_index(&mut idx, &self.dims);
        }
        JointPmf {
            dims: out_dims,
            mass: out,
        }
    }

    /// Marginal onto a single axis, as a plain pmf.
    pub fn axis_pmf(&self, axis: usize) -> Pmf {
        let m = self.marginal_onto(&[axis]);
        Pmf { mass: m.mass }
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.mass)
    }

    /// Joint entropy of a subset of axes.
    pub fn entropy_of(&self, axes: &[usize]) -> f64 {
        self.marginal_onto(axes).entropy()
    }

    /// I(A; B) for disjoint, sorted axis groups.
    pub fn mi_between(&self, a: &[usize], b: &[usize]) -> f64 {
        let ab = merge_sorted(a, b);
        clamp_information(self.entropy_of(a) + self.entropy_of(b) - self.entropy_of(&ab))
    }

    /// I(A; B | C) for pairwise disjoint, sorted axis groups.
    pub fn cmi_between(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let ac = merge_sorted(a, c);
        let bc = merge_sorted(b, c);
        let abc = merge_sorted(&ac, b);
        clamp_information(
            self.entropy_of(&ac) + self.entropy_of(&bc)
                - self.entropy_of(&abc)
                - self.entropy_of(c),
        )
    }
}

/// Odometer step through a row-major multi-index.
pub(crate) fn increment_index(idx: &mut [usize], dims: &[usize]) {
    for axis in (0..dims.len()).rev() {
        idx[axis] += 1;
        if idx[axis] < dims[axis] {
            return;
        }
        idx[axis] = 0;
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        debug_assert_ne!(a[i], b[j], "axis groups must be disjoint");
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Row-stochastic matrix: rows[x*output + y] = P(y | x).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input: usize,
    output: usize,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(input: usize, output: usize, rows: Vec<f64>) -> Result<Self> {
        if input == 0 || output == 0 {
            return Err(Error::AlphabetMismatch("channel with empty alphabet".into()));
        }
        if rows.len() != input * output {
            return Err(Error::AlphabetMismatch(format!(
                "channel needs {} entries, got {}",
                input * output,
                rows.len()
            )));
        }
        let mut rows = rows;
        for x in 0..input {
            validate_mass(&mut rows[x * output..(x + 1) * output], "channel row")?;
        }
        Ok(Channel {
            input,
            output,
            rows,
        })
    }

    /// Binary symmetric channel with crossover q.
    pub fn bsc(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("bsc needs q in [0,1], got {q}")));
        }
        Channel::new(2, 2, vec![1.0 - q, q, q, 1.0 - q])
    }

    pub fn identity(size: usize) -> Self {
        let mut rows = vec![0.0; size * size];
        for x in 0..size {
            rows[x * size + x] = 1.0;
        }
        Channel {
            input: size,
            output: size,
            rows,
        }
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    pub fn output_size(&self) -> usize {
        self.output
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.output..(x + 1) * self.output]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.output + y]
    }

    /// Cascade: first this channel, then `next` on its output.
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if self.output != next.input {
            return Err(Error::AlphabetMismatch(format!(
                "compose: output {} feeds input {}",
                self.output, next.input
            )));
        }
        let mut rows = vec![0.0; self.input * next.output];
        for x in 0..self.input {
            for y in 0..self.output {
                let p = self.get(x, y);
                if p == 0.0 {
                    continue;
                }
                for z in 0..next.output {
                    rows[x * next.output + z] += p * next.get(y, z);
                }
            }
        }
        Channel::new(self.input, next.output, rows)
    }

    /// Output distribution under input law px.
    pub fn apply(&self, px: &Pmf) -> Result<Pmf> {
        if px.size() != self.input {
            return Err(Error::AlphabetMismatch(format!(
                "apply: pmf size {} vs channel input {}",
                px.size(),
                self.input
            )));
        }
        let mut out = vec![0.0; self.output];
        for x in 0..self.input {
            let p = px.get(x);
            for y in 0..self.output {
                out[y] += p * self.get(x, y);
            }
        }
        Pmf::new(out)
    }

    /// Joint law over (input, output) with axes [x, y].
    pub fn joint_with(&self, px: &Pmf) -> Result<JointPmf> {
        if px.size() != self.input {
            return Err(Error::AlphabetMismatch(format!(
                "joint_with: pmf size {} vs channel input {}",
                px.size(),
                self.input
            )));
        }
        let mut mass = Vec::with_capacity(self.input * self.output);
        for x in 0..self.input {
            for y in 0..self.output {
                mass.push(px.get(x) * self.get(x, y));
            }
        }
        JointPmf::new(vec![self.input, self.output], mass)
    }
}
