//! Entropy-typical subspaces of tensor powers, enumerated by type class, and the
//! reduction of an i.i.d. channel problem to one-shot conditions.

use serde::{Deserialize, Serialize};

use crate::channels::{
    channel_output, coherent_information_channel, environment_output, StinespringIsometry,
    DENSE_CAP,
};
use crate::decode::{oneshot_preconditions, Preconditions};
use crate::error::{Error, Result};
use crate::qit::{
    entropy_of_spectrum, hermitian_eigen, kron, CMatrix, DensityOperator, HermitianEigen,
    Operator, PositiveOperator, C64,
};
use crate::tol;

/// Cap on the number of type classes enumerated.
pub const MAX_TYPES: u64 = 1 << 20;
/// Cap on `dⁿ` when sequences are materialized (dense projectors).
pub const MAX_SEQUENCES: u64 = 1 << 20;
/// Cap on `(|B||E|)ⁿ` for the dense tensor-power reduction.
pub const MAX_OUTPUT_DIM: u64 = 1 << 18;

/// All sequences with the same symbol counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeClass {
    pub counts: Vec<usize>,
    /// `log₂ p_{xⁿ}` of any one sequence of this type (`-inf` if it uses a zero-probability symbol).
    pub log_prob: f64,
    /// Number of sequences of this type.
    pub multiplicity: u128,
    pub typical: bool,
}

impl TypeClass {
    /// `Σ` over the class of `p_{xⁿ}`.
    pub fn weight(&self) -> f64 {
        if self.log_prob == f64::NEG_INFINITY {
            0.0
        } else {
            self.multiplicity as f64 * self.log_prob.exp2()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalProjector {
    pub base_spectrum: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    /// Entropy of the base spectrum in bits.
    pub entropy: f64,
    /// Type classes in lexicographic order of their count vectors.
    pub types: Vec<TypeClass>,
    pub subspace_dim: u128,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc · (n−i) / (i+1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn multinomial(counts: &[usize]) -> Option<u128> {
    let mut total: u128 = 0;
    let mut acc: u128 = 1;
    for &c in counts {
        total += c as u128;
        acc = acc.checked_mul(binomial(total, c as u128)?)?;
    }
    Some(acc)
}

/// Count vectors of length `k` summing to `n`, lexicographic.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=rem {
            cur.push(c);
            rec(rem - c, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn check_spectrum(spectrum: &[f64]) -> Result<()> {
    if spectrum.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if let Some(&p) = spectrum.iter().find(|&&p| !(p >= -tol::PSD)) {
        return Err(Error::OutOfRange {
            what: "spectrum entry",
            value: p,
            range: ">= 0",
        });
    }
    let s: f64 = spectrum.iter().sum();
    if (s - 1.0).abs() > tol::TRACE {
        return Err(Error::NotNormalized { trace: s });
    }
    Ok(())
}

/// Enumerates the δ-typical set `{xⁿ : |−(1/n) log₂ p_{xⁿ} − H| ≤ δ}` by type class.
/// Sequences within `1e-12` of the boundary are included.
pub fn typical_projector(spectrum: &[f64], n: usize, delta: f64) -> Result<TypicalProjector> {
    check_spectrum(spectrum)?;
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "block length",
            value: 0.0,
            range: ">= 1",
        });
    }
    if !(delta > 0.0) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            range: "> 0",
        });
    }
    let k = spectrum.len();
    let n_types = binomial((n + k - 1) as u128, (k - 1) as u128)
        .ok_or(Error::Intractable {
            what: "type classes",
            size: f64::INFINITY,
            cap: MAX_TYPES as f64,
        })?;
    if n_types > MAX_TYPES as u128 {
        return Err(Error::Intractable {
            what: "type classes",
            size: n_types as f64,
            cap: MAX_TYPES as f64,
        });
    }
    let spectrum: Vec<f64> = spectrum.iter().map(|&p| p.max(0.0)).collect();
    let entropy = entropy_of_spectrum(&spectrum)?;
    let logs: Vec<f64> = spectrum
        .iter()
        .map(|&p| if p > 0.0 { p.log2() } else { f64::NEG_INFINITY })
        .collect();
    let mut types = Vec::with_capacity(n_types as usize);
    let mut dim: u128 = 0;
    for counts in compositions(n, k) {
        let mut log_prob = 0.0;
        for (&c, &l) in counts.iter().zip(&logs) {
            if c > 0 {
                log_prob += c as f64 * l;
            }
        }
        let multiplicity = multinomial(&counts).ok_or(Error::Intractable {
            what: "type class multiplicity",
            size: f64::INFINITY,
            cap: u128::MAX as f64,
        })?;
        let typical = log_prob.is_finite()
            && (-log_prob / n as f64 - entropy).abs() <= delta + tol::TYPICAL_EDGE;
        if typical {
            dim += multiplicity;
        }
        types.push(TypeClass {
            counts,
            log_prob,
            multiplicity,
            typical,
        });
    }
    Ok(TypicalProjector {
        base_spectrum: spectrum,
        n,
        delta,
        entropy,
        types,
        subspace_dim: dim,
    })
}

impl TypicalProjector {
    fn counts_of(&self, sequence: &[usize]) -> Result<Vec<usize>> {
        let k = self.base_spectrum.len();
        if sequence.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: sequence.len(),
            });
        }
        let mut counts = vec![0; k];
        for &s in sequence {
            if s >= k {
                return Err(Error::OutOfRange {
                    what: "symbol",
                    value: s as f64,
                    range: "below the alphabet size",
                });
            }
            counts[s] += 1;
        }
        Ok(counts)
    }

    /// Whether the sequence `xⁿ` is typical.
    pub fn contains(&self, sequence: &[usize]) -> Result<bool> {
        let counts = self.counts_of(sequence)?;
        Ok(self
            .types
            .iter()
            .find(|t| t.counts == counts)
            .is_some_and(|t| t.typical))
    }

    /// `Σ_{typical} p_{xⁿ}`.
    pub fn typical_weight(&self) -> f64 {
        self.types.iter().filter(|t| t.typical).map(|t| t.weight()).sum()
    }

    /// `1 − tr(ρ^{⊗n} P_δ)`, summed over atypical classes.
    pub fn truncation_weight(&self) -> f64 {
        self.types.iter().filter(|t| !t.typical).map(|t| t.weight()).sum()
    }

    /// Largest `log₂ p_{xⁿ}` over typical sequences.
    pub fn max_typical_log_prob(&self) -> Option<f64> {
        self.types
            .iter()
            .filter(|t| t.typical)
            .map(|t| t.log_prob)
            .fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
    }

    /// Typicality of every sequence, indexed big-endian (`x₁` most significant).
    pub fn indicator(&self) -> Result<Vec<bool>> {
        let k = self.base_spectrum.len();
        let total = (k as f64).powi(self.n as i32);
        if total > MAX_SEQUENCES as f64 {
            return Err(Error::Intractable {
                what: "sequences",
                size: total,
                cap: MAX_SEQUENCES as f64,
            });
        }
        let total = total as usize;
        let typical_counts: std::collections::HashSet<&[usize]> = self
            .types
            .iter()
            .filter(|t| t.typical)
            .map(|t| t.counts.as_slice())
            .collect();
        let mut counts = vec![0usize; k];
        Ok((0..total)
            .map(|mut idx| {
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..self.n {
                    counts[idx % k] += 1;
                    idx /= k;
                }
                typical_counts.contains(counts.as_slice())
            })
            .collect())
    }

    /// Indices of typical sequences in increasing order.
    pub fn typical_indices(&self) -> Result<Vec<usize>> {
        Ok(self
            .indicator()?
            .into_iter()
            .enumerate()
            .filter_map(|(i, t)| t.then_some(i))
            .collect())
    }

    /// `P_δ` on the n-fold space, for a base-space basis whose columns carry the spectrum order.
    pub fn dense_projector(&self, basis: &CMatrix) -> Result<PositiveOperator> {
        let k = self.base_spectrum.len();
        if basis.ncols() != k || basis.nrows() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: basis.ncols(),
            });
        }
        let cols = self.embedding(basis)?;
        Ok(PositiveOperator::from_psd(&cols * cols.adjoint()))
    }

    /// Isometry whose columns are the typical product vectors `U^{⊗n}|xⁿ⟩`.
    pub fn embedding(&self, basis: &CMatrix) -> Result<CMatrix> {
        let idx = self.typical_indices()?;
        let k = self.base_spectrum.len();
        let full = k.pow(self.n as u32);
        let mut out = CMatrix::zeros(full, idx.len());
        let mut digits = vec![0usize; self.n];
        for (col, &seq) in idx.iter().enumerate() {
            let mut s = seq;
            for pos in (0..self.n).rev() {
                digits[pos] = s % k;
                s /= k;
            }
            // tensor product of basis columns, big-endian
            let mut v = vec![C64::new(1.0, 0.0)];
            for &x in &digits {
                let mut next = Vec::with_capacity(v.len() * k);
                for a in &v {
                    for r in 0..k {
                        next.push(a * basis[(r, x)]);
                    }
                }
                v = next;
            }
            for (r, z) in v.into_iter().enumerate() {
                out[(r, col)] = z;
            }
        }
        Ok(out)
    }

    /// Type classes as CSV: `counts,log_prob,multiplicity,typical` with counts joined by spaces.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["counts", "log_prob", "multiplicity", "typical"])
            .map_err(|e| Error::Invalid(e.to_string()))?;
        for t in &self.types {
            let counts = t
                .counts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([
                counts,
                format!("{}", t.log_prob),
                t.multiplicity.to_string(),
                t.typical.to_string(),
            ])
            .map_err(|e| Error::Invalid(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub n: usize,
    pub delta: f64,
    pub entropy: f64,
    pub subspace_dim: u128,
    /// `n(H + δ)`; the dimension bound is `|A_δ| ≤ 2^{n(H+δ)}`.
    pub log2_dim_bound: f64,
    pub dim_ok: bool,
    /// `max log₂ p_{xⁿ}` over typical sequences.
    pub max_log_prob: Option<f64>,
    /// `−n(H − δ)`; the operator bound is `P_δ ρ^{⊗n} P_δ ⪯ 2^{−n(H−δ)} P_δ`.
    pub log2_operator_bound: f64,
    pub operator_ok: bool,
    pub truncation_weight: f64,
}

pub fn typicality_report(state: &DensityOperator, n: usize, delta: f64) -> Result<TypicalityReport> {
    let spectrum: Vec<f64> = hermitian_eigen(state.matrix()).values;
    spectrum_report(&spectrum, n, delta)
}

/// Report for a given spectrum; the projector commutes with `ρ^{⊗n}` so both bounds are
/// checked on the diagonal.
pub fn spectrum_report(spectrum: &[f64], n: usize, delta: f64) -> Result<TypicalityReport> {
    let t = typical_projector(spectrum, n, delta)?;
    let nf = n as f64;
    let log2_dim_bound = nf * (t.entropy + delta);
    let dim_ok = t.subspace_dim == 0 || (t.subspace_dim as f64).log2() <= log2_dim_bound;
    let max_log_prob = t.max_typical_log_prob();
    let log2_operator_bound = -nf * (t.entropy - delta);
    // boundary members sit within n·1e-12 of the bound in log₂
    let operator_ok = max_log_prob.is_none_or(|m| m <= log2_operator_bound + nf * tol::TYPICAL_EDGE);
    Ok(TypicalityReport {
        n,
        delta,
        entropy: t.entropy,
        subspace_dim: t.subspace_dim,
        log2_dim_bound,
        dim_ok,
        max_log_prob,
        log2_operator_bound,
        operator_ok,
        truncation_weight: t.truncation_weight(),
    })
}

/// Truncation weights over block lengths and the least-squares slope of `ln(weight)` in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationTrend {
    pub ns: Vec<usize>,
    pub weights: Vec<f64>,
    pub strictly_decreasing: bool,
    pub log_slope: Option<f64>,
}

pub fn truncation_trend(spectrum: &[f64], ns: &[usize], delta: f64) -> Result<TruncationTrend> {
    let weights = ns
        .iter()
        .map(|&n| Ok(typical_projector(spectrum, n, delta)?.truncation_weight()))
        .collect::<Result<Vec<f64>>>()?;
    let strictly_decreasing = weights.windows(2).all(|w| w[1] < w[0]);
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&n, &w)| (n as f64, w.ln()))
        .collect();
    let log_slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(TruncationTrend {
        ns: ns.to_vec(),
        weights,
        strictly_decreasing,
        log_slope,
    })
}

/// Nominal one-shot parameters promised by typicality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalParams {
    /// `2^{n(H(B)−δ)}`
    #[serde(rename = "D_param")]
    pub d_param: f64,
    /// `2^{n(H(A)−δ)}`
    #[serde(rename = "Delta")]
    pub delta: f64,
    /// `2^{n(H(E)+δ)}`
    #[serde(rename = "rank_PE_bound")]
    pub rank_pe_bound: f64,
}

/// One-shot problem obtained from `n` uses of a channel at input `ρ`.
#[derive(Debug, Clone)]
pub struct IidReduction {
    pub n: usize,
    pub delta: f64,
    /// `ρ̃ = P_δ^A ρ^{⊗n} P_δ^A / tr(·)`, written on the typical subspace `A_δ`.
    pub rho_tilde: DensityOperator,
    /// Embedding `J: A_δ → Aⁿ`.
    pub embedding: CMatrix,
    /// `V^{⊗n} J: A_δ → Bⁿ ⊗ Eⁿ`.
    pub channel: StinespringIsometry,
    pub p_b: PositiveOperator,
    pub p_e: PositiveOperator,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub entropy_e: f64,
    pub coherent_information: f64,
    pub nominal: NominalParams,
    pub measured: Preconditions,
    /// `n I_c − 3nδ`.
    pub recipe_log2_n: f64,
    /// `max(1, min(⌊2^{recipe}⌋, |A_δ|))`.
    pub feasible_n: usize,
}

impl IidReduction {
    pub fn measured_epsilon(&self) -> f64 {
        self.measured.epsilon
    }

    pub fn summary(&self) -> IidSummary {
        IidSummary {
            n: self.n,
            delta: self.delta,
            typical_input_dim: self.rho_tilde.dim(),
            entropy_a: self.entropy_a,
            entropy_b: self.entropy_b,
            entropy_e: self.entropy_e,
            coherent_information: self.coherent_information,
            nominal: self.nominal.clone(),
            measured: self.measured.clone(),
            rank_pb: self.p_b.trace().round() as usize,
            recipe_log2_n: self.recipe_log2_n,
            feasible_n: self.feasible_n,
        }
    }
}

/// Serializable view of an [`IidReduction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidSummary {
    pub n: usize,
    pub delta: f64,
    pub typical_input_dim: usize,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub entropy_e: f64,
    pub coherent_information: f64,
    pub nominal: NominalParams,
    pub measured: Preconditions,
    pub rank_pb: usize,
    pub recipe_log2_n: f64,
    pub feasible_n: usize,
}

fn tensor_power_matrix(m: &CMatrix, n: usize) -> CMatrix {
    (1..n).fold(m.clone(), |acc, _| kron(&acc, m))
}

fn typical_on(eig: &HermitianEigen, n: usize, delta: f64) -> Result<(TypicalProjector, CMatrix)> {
    let spectrum: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = spectrum.iter().sum();
    let spectrum: Vec<f64> = spectrum.iter().map(|x| x / total).collect();
    let t = typical_projector(&spectrum, n, delta)?;
    let j = t.embedding(&eig.vectors)?;
    Ok((t, j))
}

/// Builds `ρ̃` on the input-typical subspace, the output and environment typical
/// projectors, and measures the one-shot conditions they induce.
pub fn iid_reduction(
    v: &StinespringIsometry,
    rho: &DensityOperator,
    n: usize,
    delta: f64,
) -> Result<IidReduction> {
    if rho.dim() != v.dim_a() {
        return Err(Error::DimensionMismatch {
            expected: v.dim_a(),
            found: rho.dim(),
        });
    }
    let out_dim = ((v.dim_b() * v.dim_e()) as f64).powi(n as i32);
    if out_dim > MAX_OUTPUT_DIM as f64 {
        return Err(Error::Intractable {
            what: "(|B||E|)^n",
            size: out_dim,
            cap: MAX_OUTPUT_DIM as f64,
        });
    }
    let in_dim = (v.dim_a() as f64).powi(n as i32);
    if out_dim * in_dim > DENSE_CAP {
        return Err(Error::Intractable {
            what: "dense tensor-power isometry entries",
            size: out_dim * in_dim,
            cap: DENSE_CAP,
        });
    }
    let eig_a = hermitian_eigen(rho.matrix());
    let rho_b = channel_output(v, rho)?;
    let rho_e = environment_output(v, rho)?;
    let eig_b = hermitian_eigen(rho_b.matrix());
    let eig_e = hermitian_eigen(rho_e.matrix());

    let (ta, j) = typical_on(&eig_a, n, delta)?;
    let (tb, jb) = typical_on(&eig_b, n, delta)?;
    let (te, je) = typical_on(&eig_e, n, delta)?;
    if j.ncols() == 0 {
        return Err(Error::Invalid(format!(
            "input typical subspace is empty at n = {n}, delta = {delta}"
        )));
    }
    let rho_n = tensor_power_matrix(rho.matrix(), n);
    let restricted = j.adjoint() * rho_n * &j;
    let w = restricted.trace().re;
    let rho_tilde = DensityOperator::new(restricted.unscale(w))?;
    let channel = v.tensor_power(n)?.restrict(&j)?;
    let p_b = PositiveOperator::from_psd(&jb * jb.adjoint());
    let p_e = PositiveOperator::from_psd(&je * je.adjoint());
    let measured = oneshot_preconditions(&channel, &rho_tilde, &p_b, &p_e)?;

    let nf = n as f64;
    let (ha, hb, he) = (ta.entropy, tb.entropy, te.entropy);
    let ic = coherent_information_channel(rho, v)?;
    let recipe_log2_n = nf * ic - 3.0 * nf * delta;
    let feasible_n = if recipe_log2_n < 0.0 {
        1
    } else {
        (recipe_log2_n.exp2().floor() as usize).clamp(1, rho_tilde.dim())
    };
    Ok(IidReduction {
        n,
        delta,
        rho_tilde,
        embedding: j,
        channel,
        p_b,
        p_e,
        entropy_a: ha,
        entropy_b: hb,
        entropy_e: he,
        coherent_information: ic,
        nominal: NominalParams {
            d_param: (nf * (hb - delta)).exp2(),
            delta: (nf * (ha - delta)).exp2(),
            rank_pe_bound: (nf * (he + delta)).exp2(),
        },
        measured,
        recipe_log2_n,
        feasible_n,
    })
}
