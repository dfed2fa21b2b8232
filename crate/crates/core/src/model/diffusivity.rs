//! Level-dependent coefficients `D(u)` for separable fluxes `a(u, s) = D(u) phi(s)`.

use serde::{Deserialize, Serialize};

/// Polynomial in `(u - shift)`: `sum_k coeffs[k] * (u - shift)^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    #[serde(default)]
    pub shift: f64,
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(shift: f64, coeffs: Vec<f64>) -> Self {
        Self { shift, coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0.0, vec![c])
    }

    pub fn zero() -> Self {
        Self::new(0.0, Vec::new())
    }

    /// `c * (u - root)^n`.
    pub fn power(c: f64, root: f64, n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = c;
        Self::new(root, coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let x = u - self.shift;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        let x = u - self.shift;
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * x + c * k as f64;
        }
        acc
    }

    /// Same polynomial expressed in powers of `u`.
    pub fn to_monomial(&self) -> Poly {
        if self.shift == 0.0 {
            return self.clone();
        }
        // Expand (u - h)^k with the binomial theorem.
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        let h = -self.shift;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut binom = 1.0;
            for (j, o) in out.iter_mut().enumerate().take(k + 1) {
                *o += c * binom * h.powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        Poly::new(0.0, out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b) = if self.shift == other.shift {
            (self.clone(), other.clone())
        } else {
            (self.to_monomial(), other.to_monomial())
        };
        let n = a.coeffs.len().max(b.coeffs.len());
        let coeffs = (0..n)
            .map(|k| a.coeffs.get(k).copied().unwrap_or(0.0) + b.coeffs.get(k).copied().unwrap_or(0.0))
            .collect();
        Poly::new(a.shift, coeffs)
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly::new(self.shift, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let a = self.to_monomial();
        let b = other.to_monomial();
        if a.coeffs.is_empty() || b.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; a.coeffs.len() + b.coeffs.len() - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            for (j, y) in b.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Poly::new(0.0, out)
    }
}

/// One piece of a piecewise polynomial, valid on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub poly: Poly,
}

/// `D(u)` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diffusivity {
    Poly(Poly),
    /// Pieces sorted by `lo`, covering `[0, 1]` without gaps.
    Piecewise(Vec<Piece>),
}

impl Diffusivity {
    pub fn constant(c: f64) -> Self {
        Diffusivity::Poly(Poly::constant(c))
    }

    /// Checks that pieces are sorted, contiguous and cover `[0, 1]`.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Diffusivity::Poly(_) => Ok(()),
            Diffusivity::Piecewise(pieces) => {
                if pieces.is_empty() {
                    return Err("piecewise diffusivity has no pieces".into());
                }
                if pieces[0].lo > 0.0 || pieces.last().unwrap().hi < 1.0 {
                    return Err("pieces must cover [0, 1]".into());
                }
                for w in pieces.windows(2) {
                    if (w[0].hi - w[1].lo).abs() > 1e-15 {
                        return Err(format!("gap or overlap between pieces at {}", w[0].hi));
                    }
                }
                if pieces.iter().any(|p| p.hi <= p.lo) {
                    return Err("empty piece".into());
                }
                Ok(())
            }
        }
    }

    fn piece(&self, u: f64) -> &Poly {
        match self {
            Diffusivity::Poly(p) => p,
            Diffusivity::Piecewise(pieces) => {
                let idx = pieces.partition_point(|p| p.hi <= u);
                &pieces[idx.min(pieces.len() - 1)].poly
            }
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.piece(u).eval(u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        self.piece(u).deriv(u)
    }

    /// Closed intervals on which `D` vanishes identically, merged.
    pub fn zero_intervals(&self) -> Vec<[f64; 2]> {
        match self {
            Diffusivity::Poly(p) => {
                if p.is_zero() {
                    vec![[0.0, 1.0]]
                } else {
                    Vec::new()
                }
            }
            Diffusivity::Piecewise(pieces) => {
                let mut out: Vec<[f64; 2]> = Vec::new();
                for p in pieces.iter().filter(|p| p.poly.is_zero()) {
                    match out.last_mut() {
                        Some(last) if (last[1] - p.lo).abs() <= 1e-15 => last[1] = p.hi,
                        _ => out.push([p.lo.max(0.0), p.hi.min(1.0)]),
                    }
                }
                out
            }
        }
    }

    /// Interior points where the piece changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Diffusivity::Poly(_) => Vec::new(),
            Diffusivity::Piecewise(pieces) => pieces
                .iter()
                .skip(1)
                .map(|p| p.lo)
                .filter(|&x| x > 0.0 && x < 1.0)
                .collect(),
        }
    }

    fn as_pieces(&self) -> Vec<Piece> {
        match self {
            Diffusivity::Poly(p) => vec![Piece { lo: 0.0, hi: 1.0, poly: p.clone() }],
            Diffusivity::Piecewise(pieces) => pieces.clone(),
        }
    }

    /// `self + c * other`, split on the union of both breakpoint sets.
    pub fn add_scaled(&self, other: &Diffusivity, c: f64) -> Diffusivity {
        if c == 0.0 {
            return self.clone();
        }
        if let (Diffusivity::Poly(a), Diffusivity::Poly(b)) = (self, other) {
            return Diffusivity::Poly(a.add(&b.scale(c)));
        }
        let a = self.as_pieces();
        let b = other.as_pieces();
        let mut cuts: Vec<f64> = a.iter().chain(b.iter()).flat_map(|p| [p.lo, p.hi]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
        let find = |pieces: &[Piece], mid: f64| -> Poly {
            let idx = pieces.partition_point(|p| p.hi <= mid);
            pieces[idx.min(pieces.len() - 1)].poly.clone()
        };
        let pieces = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let pa = find(&a, mid);
                let pb = find(&b, mid).scale(c);
                Piece { lo: w[0], hi: w[1], poly: pa.add(&pb) }
            })
            .collect();
        Diffusivity::Piecewise(pieces)
    }
}
