//! Product trees over a prime basis: remainder trees for reduction and
//! divide-and-conquer Chinese remaindering.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::bundle::{limbs_to_biguint, BundledPoly};
use super::primes::PrimeBasis;
use crate::error::{Error, Result};

/// Below this many primes a residue is cheaper by Horner over 64-bit limbs
/// than by descending a remainder tree.
pub const REMAINDER_TREE_MIN_PRIMES: usize = 48;

struct Node {
    lo: usize,
    modulus: BigUint,
    /// Children and `(left modulus)^{-1} mod (right modulus)`.
    split: Option<(usize, usize, BigUint)>,
}

/// Balanced binary tree of products of consecutive primes.
pub struct ProductTree {
    primes: Vec<u64>,
    nodes: Vec<Node>,
    root: usize,
}

impl ProductTree {
    pub fn new(primes: &[u64]) -> Self {
        assert!(!primes.is_empty());
        let mut nodes = Vec::with_capacity(2 * primes.len());
        let root = Self::build(primes, 0, primes.len(), &mut nodes);
        Self {
            primes: primes.to_vec(),
            nodes,
            root,
        }
    }

    fn build(primes: &[u64], lo: usize, hi: usize, nodes: &mut Vec<Node>) -> usize {
        if hi - lo == 1 {
            nodes.push(Node {
                lo,
                modulus: BigUint::from(primes[lo]),
                split: None,
            });
            return nodes.len() - 1;
        }
        let mid = (lo + hi) / 2;
        let l = Self::build(primes, lo, mid, nodes);
        let r = Self::build(primes, mid, hi, nodes);
        let (ml, mr) = (&nodes[l].modulus, &nodes[r].modulus);
        let inv = mod_inverse(&(ml % mr), mr);
        let modulus = ml * mr;
        nodes.push(Node {
            lo,
            modulus,
            split: Some((l, r, inv)),
        });
        nodes.len() - 1
    }

    /// Product of all primes.
    pub fn modulus(&self) -> &BigUint {
        &self.nodes[self.root].modulus
    }

    /// Residues of `x` modulo every prime, by descending the tree.
    pub fn reduce(&self, x: &BigUint, out: &mut [u64]) {
        let x = if x >= self.modulus() {
            x % self.modulus()
        } else {
            x.clone()
        };
        self.reduce_at(self.root, x, out);
    }

    fn reduce_at(&self, node: usize, x: BigUint, out: &mut [u64]) {
        let n = &self.nodes[node];
        match &n.split {
            None => out[n.lo] = (x % self.primes[n.lo]).to_u64().unwrap_or(0),
            Some((l, r, _)) => {
                let xl = &x % &self.nodes[*l].modulus;
                let xr = x % &self.nodes[*r].modulus;
                self.reduce_at(*l, xl, out);
                self.reduce_at(*r, xr, out);
            }
        }
    }

    /// The unique `x < prod p_i` with `x = residues[i] mod p_i`.
    pub fn reconstruct(&self, residues: &[u64]) -> BigUint {
        self.combine(self.root, residues)
    }

    fn combine(&self, node: usize, residues: &[u64]) -> BigUint {
        let n = &self.nodes[node];
        match &n.split {
            None => BigUint::from(residues[n.lo] % self.primes[n.lo]),
            Some((l, r, inv)) => {
                let xl = self.combine(*l, residues);
                let xr = self.combine(*r, residues);
                let (ml, mr) = (&self.nodes[*l].modulus, &self.nodes[*r].modulus);
                let xl_r = &xl % mr;
                let diff = if xr >= xl_r { xr - xl_r } else { xr + mr - xl_r };
                let t = (diff * inv) % mr;
                xl + ml * t
            }
        }
    }
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    if m == &BigUint::from(1u32) {
        return BigUint::zero();
    }
    let (a, m) = (
        num_bigint::BigInt::from(a.clone()),
        num_bigint::BigInt::from(m.clone()),
    );
    let e = a.extended_gcd(&m);
    debug_assert!(e.gcd == 1.into());
    e.x.mod_floor(&m).to_biguint().expect("nonnegative")
}

/// `x mod p` for little-endian 64-bit limbs.
#[inline]
pub fn reduce_limbs(limbs: &[u64], p: u64) -> u64 {
    let mut r = 0u128;
    for &l in limbs.iter().rev() {
        r = ((r << 64) | l as u128) % p as u128;
    }
    r as u64
}

/// Residues of each limb vector modulo each prime, prime-major.
pub(crate) fn residues_of_limbs(
    limbs: &[Vec<u64>],
    basis: &PrimeBasis,
    tree: Option<&ProductTree>,
) -> Vec<Vec<u64>> {
    let np = basis.len();
    match tree {
        Some(tree) if np >= REMAINDER_TREE_MIN_PRIMES => {
            let per_bundle: Vec<Vec<u64>> = limbs
                .par_iter()
                .map(|l| {
                    let mut out = vec![0u64; np];
                    tree.reduce(&limbs_to_biguint(l), &mut out);
                    out
                })
                .collect();
            (0..np)
                .map(|i| per_bundle.iter().map(|r| r[i]).collect())
                .collect()
        }
        _ => basis
            .primes()
            .par_iter()
            .map(|&p| limbs.iter().map(|l| reduce_limbs(l, p)).collect())
            .collect(),
    }
}

/// Residues of every bundle modulo every prime of the basis: entry `[i][k]`
/// is `bundles[k] mod p_i`.
pub fn reduce_mod_basis(f: &BundledPoly, basis: &PrimeBasis) -> Vec<Vec<u64>> {
    let limbs: Vec<Vec<u64>> = f.bundles.iter().map(|b| b.to_u64_digits()).collect();
    let tree = (basis.len() >= REMAINDER_TREE_MIN_PRIMES).then(|| ProductTree::new(basis.primes()));
    residues_of_limbs(&limbs, basis, tree.as_ref())
}

/// Remainder-tree reduction regardless of basis size.
pub fn reduce_remainder_tree(f: &BundledPoly, basis: &PrimeBasis) -> Vec<Vec<u64>> {
    let tree = ProductTree::new(basis.primes());
    let mut out = vec![vec![0u64; f.bundles.len()]; basis.len()];
    let mut tmp = vec![0u64; basis.len()];
    for (k, b) in f.bundles.iter().enumerate() {
        tree.reduce(b, &mut tmp);
        for (i, &r) in tmp.iter().enumerate() {
            out[i][k] = r;
        }
    }
    out
}

/// Per-prime Horner reduction regardless of basis size.
pub fn reduce_direct(f: &BundledPoly, basis: &PrimeBasis) -> Vec<Vec<u64>> {
    let limbs: Vec<Vec<u64>> = f.bundles.iter().map(|b| b.to_u64_digits()).collect();
    residues_of_limbs(&limbs, basis, None)
}

/// Rebuild each coefficient from its residues (`residues[i][k]` modulo `p_i`).
pub fn crt_reconstruct(residues: &[Vec<u64>], basis: &PrimeBasis) -> Result<Vec<BigUint>> {
    if residues.len() != basis.len() {
        return Err(Error::InvalidParameter(format!(
            "{} residue polynomials for {} primes",
            residues.len(),
            basis.len()
        )));
    }
    let len = residues[0].len();
    if residues.iter().any(|r| r.len() != len) {
        return Err(Error::InvalidParameter(
            "residue polynomials differ in length".into(),
        ));
    }
    let tree = ProductTree::new(basis.primes());
    Ok((0..len)
        .into_par_iter()
        .map_init(
            || vec![0u64; basis.len()],
            |column, k| {
                for (c, r) in column.iter_mut().zip(residues) {
                    *c = r[k];
                }
                tree.reconstruct(column)
            },
        )
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigmul::bundle::BundleParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(bundles: Vec<BigUint>) -> BundledPoly {
        BundledPoly {
            bundles,
            params: BundleParams::new(1, 64).unwrap(),
        }
    }

    #[test]
    fn reduce_examples() {
        let basis = PrimeBasis::from_primes(&[3, 7]).unwrap();
        let f = poly(vec![BigUint::from(10u32)]);
        assert_eq!(reduce_mod_basis(&f, &basis), vec![vec![1], vec![3]]);
        assert_eq!(reduce_remainder_tree(&f, &basis), vec![vec![1], vec![3]]);

        let basis = PrimeBasis::ntt(1).unwrap();
        let p = basis.primes()[0];
        let x = (BigUint::from(1u32) << 64u32) + 1u32;
        let expected = (&x % p).to_u64().unwrap();
        let f = poly(vec![x, BigUint::from(5u32)]);
        assert_eq!(reduce_direct(&f, &basis), vec![vec![expected, 5]]);
        assert_eq!(reduce_remainder_tree(&f, &basis), vec![vec![expected, 5]]);
    }

    #[test]
    fn tree_and_direct_agree() {
        let basis = PrimeBasis::ntt(70).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bundles: Vec<BigUint> = (0..20)
            .map(|_| {
                let limbs: Vec<u32> = (0..rng.gen_range(1..200)).map(|_| rng.gen()).collect();
                BigUint::new(limbs)
            })
            .collect();
        let f = poly(bundles.clone());
        let direct = reduce_direct(&f, &basis);
        assert_eq!(reduce_remainder_tree(&f, &basis), direct);
        assert_eq!(reduce_mod_basis(&f, &basis), direct);
        for (i, &p) in basis.primes().iter().enumerate() {
            for (k, b) in bundles.iter().enumerate() {
                assert_eq!(direct[i][k], (b % p).to_u64().unwrap());
            }
        }
    }

    #[test]
    fn crt_examples() {
        let basis = PrimeBasis::from_primes(&[3, 7]).unwrap();
        let x = crt_reconstruct(&[vec![1], vec![3]], &basis).unwrap();
        assert_eq!(x, vec![BigUint::from(10u32)]);

        let one = PrimeBasis::from_primes(&[97]).unwrap();
        let x = crt_reconstruct(&[vec![5, 96, 0]], &one).unwrap();
        assert_eq!(x, [5u32, 96, 0].map(BigUint::from).to_vec());
        assert!(crt_reconstruct(&[vec![1], vec![2, 3]], &basis).is_err());
    }

    /// Sequential CRT by incremental lifting, independent of the tree.
    fn crt_oracle(residues: &[u64], primes: &[u64]) -> BigUint {
        let mut x = BigUint::zero();
        let mut m = BigUint::from(1u32);
        for (&r, &p) in residues.iter().zip(primes) {
            let xm = (&x % p).to_u64().unwrap();
            let mm = (&m % p).to_u64().unwrap();
            let inv = crate::arith::inv_mod(mm, p).unwrap();
            let t = crate::arith::mul_mod((r + p - xm) % p, inv, p);
            x += &m * t;
            m *= p;
        }
        x
    }

    #[test]
    fn crt_random_62_bit() {
        let basis = PrimeBasis::ntt(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let residues: Vec<Vec<u64>> = basis
            .primes()
            .iter()
            .map(|&p| (0..50).map(|_| rng.gen_range(0..p)).collect())
            .collect();
        let got = crt_reconstruct(&residues, &basis).unwrap();
        for (k, x) in got.iter().enumerate() {
            let col: Vec<u64> = residues.iter().map(|r| r[k]).collect();
            assert_eq!(x, &crt_oracle(&col, basis.primes()));
            for (i, &p) in basis.primes().iter().enumerate() {
                assert_eq!((x % p).to_u64().unwrap(), residues[i][k]);
            }
        }
    }
}
