use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::props::{init_exactness, rearranged_equivalence};
use super::{randn, random_psd, ExperimentRecord};
use crate::error::Result;
use crate::kron_approx::{
    kron_proj_split, kron_proj_split_tensor, KroneckerFactorList, KroneckerFactorPair,
};
use crate::linalg::{
    dominant_singular_triplet, kron, mat, qr, rearrange, sym_eig, unrearrange, vec, DenseMatrix,
    DenseTensor,
};

pub const SELFTEST: &str = "selftest";

/// One named oracle identity and the largest deviation it saw.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub error: f64,
    pub tol: f64,
}

impl SelfCheck {
    pub fn passed(&self) -> bool {
        self.error <= self.tol
    }

    pub fn line(&self) -> String {
        let status = if self.passed() { "ok" } else { "FAILED" };
        format!(
            "{:<24} {status:<6} max error {:.3e} (tol {:.0e})",
            self.name, self.error, self.tol
        )
    }
}

/// Linear-algebra and Kronecker identities on seeded random inputs.
pub fn run_selftest(seed: u64) -> Result<Vec<SelfCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut check = |name, error: f64, tol| checks.push(SelfCheck { name, error, tol });

    let (b, c) = (randn(3, 2, &mut rng), randn(2, 4, &mut rng));
    let k = kron(&b, &c)?;
    let rank1 = DenseMatrix::outer(&vec(&b), &vec(&c));
    let back = unrearrange(&rank1, 3, 2, 2, 4)?;
    check(
        "rearrange",
        rearrange(&k, 3, 2, 2, 4)?
            .max_abs_diff(&rank1)
            .max(back.max_abs_diff(&k)),
        1e-14,
    );

    let (b, c, x) = (
        randn(3, 3, &mut rng),
        randn(2, 2, &mut rng),
        randn(3, 2, &mut rng),
    );
    let lhs = vec(&b.matmul(&x)?.matmul_t(&c)?);
    let rhs = kron(&b, &c)?.matvec(&vec(&x))?;
    let err = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check("kron-identity", err, 1e-12);

    let a = randn(6, 4, &mut rng);
    let (q, r) = qr(&a)?;
    check(
        "qr",
        q.matmul(&r)?.max_abs_diff(&a).max(q.orthogonality_defect()),
        1e-12,
    );

    let s = random_psd(5, &mut rng, 0.0);
    let e = sym_eig(&s)?;
    check(
        "sym_eig",
        e.reconstruct()
            .max_abs_diff(&s)
            .max(e.eigenvectors.orthogonality_defect()),
        1e-10,
    );

    let g = randn(5, 3, &mut rng);
    let top = dominant_singular_triplet(&g, 20_000, 1e-13)?;
    let largest = sym_eig(&g.t_matmul(&g)?)?
        .eigenvalues
        .into_iter()
        .fold(f64::MIN, f64::max);
    check(
        "power-iteration",
        (top.sigma - largest.sqrt()).abs() / top.sigma,
        1e-10,
    );

    check(
        "kron-proj-split",
        rearranged_equivalence(&mut rng, 20)?.worst,
        1e-10,
    );
    check("init-vs-nkp", init_exactness(&mut rng, 20)?.worst, 1e-9);

    let pair =
        KroneckerFactorPair::new(random_psd(3, &mut rng, 0.1), random_psd(2, &mut rng, 0.1))?;
    let g = randn(3, 2, &mut rng);
    let two = kron_proj_split(&pair, &g)?;
    let list = kron_proj_split_tensor(
        &KroneckerFactorList::from(pair),
        &DenseTensor::from_matrix(&g),
    )?;
    let err = list.factors[0]
        .max_abs_diff(&two.l)
        .max(list.factors[1].max_abs_diff(&two.r));
    check("tensor-reduction", err, 1e-12);

    let v = randn(4, 1, &mut rng).into_data();
    check(
        "vec-mat",
        mat(&v, 2, 2)?
            .data()
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .sum(),
        0.0,
    );
    Ok(checks)
}

pub fn selftest_records(seed: u64, checks: &[SelfCheck]) -> Vec<ExperimentRecord> {
    checks
        .iter()
        .enumerate()
        .flat_map(|(k, c)| {
            [
                ExperimentRecord::new(
                    SELFTEST,
                    seed,
                    c.name,
                    "pass",
                    k as u64,
                    if c.passed() { 1.0 } else { 0.0 },
                ),
                ExperimentRecord::new(SELFTEST, seed, c.name, "error", k as u64, c.error),
            ]
        })
        .collect()
}
