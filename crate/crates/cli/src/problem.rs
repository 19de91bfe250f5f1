use std::path::PathBuf;
use std::str::FromStr;

use relusolve_core::iter::SpectralClass;
use relusolve_core::problems::estimate_extremal_eigs;
use relusolve_core::{gen_laplacian, random_spd, SparseMatrix, SparsityPattern};

use crate::coo::read_coo;
use crate::error::{CliError, Result};

/// Tolerance of the eigenvalue estimate used for matrices read from files.
pub const EIG_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemKind {
    Laplacian1d,
    Laplacian2d,
    Random,
    File(PathBuf),
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "laplacian1d" => Ok(Self::Laplacian1d),
            "laplacian2d" => Ok(Self::Laplacian2d),
            "random" => Ok(Self::Random),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown problem {s:?}; expected laplacian1d, laplacian2d, random or file:<path>"
                )),
            },
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Laplacian1d => f.write_str("laplacian1d"),
            Self::Laplacian2d => f.write_str("laplacian2d"),
            Self::Random => f.write_str("random"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// A matrix with bracketing spectral bounds. For `random` the bounds define
/// a whole class from which further matrices can be drawn.
#[derive(Clone, Debug)]
pub struct Problem {
    pub kind: ProblemKind,
    pub matrix: SparseMatrix,
    pub spectral: SpectralClass,
}

/// Builds the problem. `n` is the node count per direction for the
/// Laplacians and the matrix size for `random`; files ignore it.
pub fn load_problem(kind: &ProblemKind, n: usize, seed: u64, kappa: f64) -> Result<Problem> {
    let (matrix, spectral) = match kind {
        ProblemKind::Laplacian1d | ProblemKind::Laplacian2d => {
            let dim = if *kind == ProblemKind::Laplacian1d { 1 } else { 2 };
            let p = gen_laplacian(dim, n)?;
            (p.matrix, p.spectral)
        }
        ProblemKind::Random => {
            if n == 0 {
                return Err(CliError::InvalidArgs("--n must be positive".into()));
            }
            if !(kappa >= 1.0) || !kappa.is_finite() {
                return Err(CliError::InvalidArgs("--kappa must be finite and >= 1".into()));
            }
            let spec = SpectralClass::new(1.0, kappa)?;
            let pattern = SparsityPattern::tridiagonal(n)?;
            (random_spd(&pattern, &spec, seed)?, spec)
        }
        ProblemKind::File(path) => {
            let matrix = read_coo(path)?;
            if !matrix.is_symmetric() {
                return Err(CliError::InvalidArgs(format!(
                    "{}: matrix is not symmetric",
                    path.display()
                )));
            }
            let spectral = bracket_spectrum(&matrix, seed)?;
            (matrix, spectral)
        }
    };
    Ok(Problem {
        kind: kind.clone(),
        matrix,
        spectral,
    })
}

/// Estimated extremal eigenvalues widened by their residuals and the
/// estimation tolerance.
pub fn bracket_spectrum(a: &SparseMatrix, seed: u64) -> Result<SpectralClass> {
    let e = estimate_extremal_eigs(a, EIG_TOL, seed)?;
    let slack = EIG_TOL * e.lambda_max.abs();
    let lo = e.lambda_min - e.residual_min - slack;
    let hi = e.lambda_max + e.residual_max + slack;
    if !(lo > 0.0) {
        return Err(CliError::InvalidArgs(format!(
            "matrix is not safely positive definite (smallest eigenvalue estimate {})",
            e.lambda_min
        )));
    }
    Ok(SpectralClass::new(lo, hi)?)
}

impl Problem {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn eta(&self) -> usize {
        self.matrix.pattern().eta()
    }

    /// The matrix for verification sample `k`: fresh draws from the class
    /// for `random`, the fixed matrix otherwise.
    pub fn sample_matrix(&self, class: &SpectralClass, seed: u64) -> Result<SparseMatrix> {
        match self.kind {
            ProblemKind::Random => Ok(random_spd(self.matrix.pattern(), class, seed)?),
            _ => Ok(self.matrix.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_kinds() {
        assert_eq!("random".parse::<ProblemKind>().unwrap(), ProblemKind::Random);
        assert_eq!(
            "file:a/b.coo".parse::<ProblemKind>().unwrap(),
            ProblemKind::File(PathBuf::from("a/b.coo"))
        );
        assert!("file:".parse::<ProblemKind>().is_err());
        assert!("laplacian3d".parse::<ProblemKind>().is_err());
    }

    #[test]
    fn estimated_bounds_bracket_laplacian() {
        let p = gen_laplacian(1, 12).unwrap();
        let s = bracket_spectrum(&p.matrix, 0).unwrap();
        assert!(s.lambda_min() <= p.spectral.lambda_min());
        assert!(s.lambda_max() >= p.spectral.lambda_max());
    }
}
