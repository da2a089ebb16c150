//! Exact products of long power series with small nonnegative coefficients.
//!
//! The product runs in five stages: Kronecker bundling, reduction of the
//! bundles modulo a basis of word-size primes, one NTT product per prime,
//! Chinese remaindering of the bundle products, and digit extraction.
//! Intermediate residues can be staged through chunk files on disk.

pub mod bundle;
pub mod crt;
pub mod ntt;
pub mod primes;
pub mod staging;

use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use bundle::{bundle, unbundle_product, BundleParams, BundledPoly};
pub use crt::{crt_reconstruct, reduce_direct, reduce_mod_basis, reduce_remainder_tree, ProductTree};
pub use ntt::{ntt_mul, NttPlan};
pub use primes::{ntt_primes, PrimeBasis};
pub use staging::{Manifest, StagingConfig};

use crate::coeffs::{chunk_path, write_chunk, CoeffTable, Width};
use crate::error::{Error, Result};
use bundle::{extract_digits, pack_limbs};
use crt::{residues_of_limbs, REMAINDER_TREE_MIN_PRIMES};
use ntt::ceil_log2;

/// Stem of the output chunk files written by staged products.
pub const PRODUCT_STEM: &str = "prod";

/// `f * g` truncated to `max(len f, len g)` coefficients.
pub fn multiply(
    f: &CoeffTable,
    g: &CoeffTable,
    params: BundleParams,
    basis: &PrimeBasis,
    staging: &StagingConfig,
) -> Result<CoeffTable> {
    multiply_truncated(f, g, f.len().max(g.len()), params, basis, staging)
}

/// `f * g` with parameters derived from the inputs: `B = 16`, the smallest
/// safe `s`, and the smallest default basis covering it. Kept in memory.
pub fn multiply_exact(f: &CoeffTable, g: &CoeffTable, out_length: usize) -> Result<CoeffTable> {
    let params = BundleParams::for_inputs(f, g, 16)?;
    let basis = PrimeBasis::with_capacity(params.product_bits())?;
    multiply_truncated(f, g, out_length, params, &basis, &StagingConfig::in_memory())
}

/// Bytes held at once by the in-memory route.
pub fn memory_footprint(out_length: usize, params: BundleParams, primes: usize) -> u64 {
    let n0 = params.bundle_count(out_length) as u64;
    primes as u64 * n0 * 24 + n0 * (params.product_bits() / 8 + 32)
}

/// `f * g` truncated to `out_length` coefficients.
pub fn multiply_truncated(
    f: &CoeffTable,
    g: &CoeffTable,
    out_length: usize,
    params: BundleParams,
    basis: &PrimeBasis,
    staging: &StagingConfig,
) -> Result<CoeffTable> {
    let width = if params.s <= 32 { Width::W4 } else { Width::W8 };
    if out_length == 0 || f.is_empty() || g.is_empty() {
        return CoeffTable::from_vec(vec![0; out_length], width);
    }
    let capacity = basis.capacity_bits();
    if capacity <= params.product_bits() as f64 {
        return Err(Error::CrtCapacity {
            needed_bits: params.product_bits(),
            capacity_bits: capacity,
        });
    }
    let n0 = params.bundle_count(out_length);
    let log_n = ceil_log2(2 * n0 - 1);
    if log_n > basis.log_len() {
        return Err(Error::TransformTooLong {
            prime: basis.primes()[0],
            requested: log_n,
            supported: basis.log_len(),
        });
    }
    let job = Job {
        f,
        g,
        out_length,
        n0,
        log_n,
        params,
        basis,
        width,
    };
    match &staging.dir {
        Some(dir) if memory_footprint(out_length, params, basis.len()) > staging.memory_budget => {
            job.run_staged(dir, staging.chunks.max(1))
        }
        _ => job.run_in_memory(),
    }
}

struct Job<'a> {
    f: &'a CoeffTable,
    g: &'a CoeffTable,
    out_length: usize,
    n0: usize,
    log_n: u32,
    params: BundleParams,
    basis: &'a PrimeBasis,
    width: Width,
}

impl Job<'_> {
    /// Packed limbs of bundles `[first, first + count)` of `t`.
    fn limbs(&self, t: &CoeffTable, first: usize, count: usize) -> Result<Vec<Vec<u64>>> {
        let b = self.params.b;
        let mut values = t.read_range(first * b, count * b)?;
        values.resize(count * b, 0);
        values
            .chunks(b)
            .enumerate()
            .map(|(n, c)| pack_limbs(c, self.params.s, (first + n) * b))
            .collect()
    }

    fn tree(&self) -> Option<ProductTree> {
        (self.basis.len() >= REMAINDER_TREE_MIN_PRIMES)
            .then(|| ProductTree::new(self.basis.primes()))
    }

    fn plans(&self) -> Result<Vec<NttPlan>> {
        self.basis
            .primes()
            .par_iter()
            .zip(self.basis.roots())
            .map(|(&p, &w)| NttPlan::new(p, w, self.basis.log_len(), self.log_n))
            .collect()
    }

    fn run_in_memory(&self) -> Result<CoeffTable> {
        let tree = self.tree();
        let res_f = residues_of_limbs(&self.limbs(self.f, 0, self.n0)?, self.basis, tree.as_ref());
        let res_g = residues_of_limbs(&self.limbs(self.g, 0, self.n0)?, self.basis, tree.as_ref());
        let plans = self.plans()?;
        let products: Vec<Vec<u64>> = plans
            .par_iter()
            .zip(res_f.par_iter().zip(&res_g))
            .map(|(plan, (a, b))| plan.multiply(a, b, self.n0))
            .collect();
        drop((res_f, res_g));
        let crt = tree.unwrap_or_else(|| ProductTree::new(self.basis.primes()));
        let limbs = crt_columns(&crt, &products, 0, self.n0);
        let mut out = Vec::with_capacity(self.n0 * self.params.b);
        extract_digits(&[], &limbs, self.params, 0, &mut out)?;
        out.truncate(self.out_length);
        CoeffTable::from_vec(out, self.width)
    }

    fn run_staged(&self, dir: &Path, chunks: usize) -> Result<CoeffTable> {
        std::fs::create_dir_all(dir)?;
        let bpc = self.n0.div_ceil(chunks.min(self.n0));
        let m = self.n0.div_ceil(bpc);
        let np = self.basis.len();
        let span = |j: usize| (j * bpc, ((j + 1) * bpc).min(self.n0));

        let params: Vec<(String, String)> = [
            ("N", self.out_length.to_string()),
            ("B", self.params.b.to_string()),
            ("s", self.params.s.to_string()),
            ("m", m.to_string()),
            ("log_n", self.log_n.to_string()),
            (
                "primes",
                self.basis
                    .primes()
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("input_f", staging::sha256_table(self.f)?),
            ("input_g", staging::sha256_table(self.g)?),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let mut manifest = Manifest::load(dir);
        if !manifest.matches(&params) {
            manifest = Manifest::default();
            for (k, v) in &params {
                manifest.set(k.clone(), v);
            }
            manifest.save(dir)?;
        }

        // stage 1-2: bundle and reduce each input chunk, prime-major within the chunk
        let tree = self.tree();
        for (stem, input) in [("fres", self.f), ("gres", self.g)] {
            let written = (0..m)
                .into_par_iter()
                .map(|j| -> Result<Option<PathBuf>> {
                    let path = chunk_path(dir, stem, Width::W8, j);
                    if manifest.file_is_current(&path) {
                        return Ok(None);
                    }
                    let (lo, hi) = span(j);
                    let res = residues_of_limbs(&self.limbs(input, lo, hi - lo)?, self.basis, tree.as_ref());
                    write_chunk(&path, &res.concat(), Width::W8)?;
                    Ok(Some(path))
                })
                .collect::<Result<Vec<_>>>()?;
            record(&mut manifest, dir, written)?;
        }

        // stage 3: one product per prime, gathered across chunks
        let plans = self.plans()?;
        let gather = |stem: &str, i: usize| -> Result<Vec<u64>> {
            let mut poly = Vec::with_capacity(self.n0);
            for j in 0..m {
                let (lo, hi) = span(j);
                let count = hi - lo;
                let path = chunk_path(dir, stem, Width::W8, j);
                poly.extend(read_u64s(&path, i * count, count)?);
            }
            Ok(poly)
        };
        let written = (0..np)
            .into_par_iter()
            .map(|i| -> Result<Option<PathBuf>> {
                let path = chunk_path(dir, "hres", Width::W8, i);
                if manifest.file_is_current(&path) {
                    return Ok(None);
                }
                let prod = plans[i].multiply(&gather("fres", i)?, &gather("gres", i)?, self.n0);
                write_chunk(&path, &prod, Width::W8)?;
                Ok(Some(path))
            })
            .collect::<Result<Vec<_>>>()?;
        record(&mut manifest, dir, written)?;

        // stage 4-5: reconstruct each chunk of bundle products and extract digits
        let crt = tree.unwrap_or_else(|| ProductTree::new(self.basis.primes()));
        let b = self.params.b;
        let written = (0..m)
            .into_par_iter()
            .map(|j| -> Result<Option<PathBuf>> {
                let path = chunk_path(dir, PRODUCT_STEM, self.width, j);
                if manifest.file_is_current(&path) {
                    return Ok(None);
                }
                let (lo, hi) = span(j);
                let from = lo.saturating_sub(1);
                let residues = (0..np)
                    .map(|i| read_u64s(&chunk_path(dir, "hres", Width::W8, i), from, hi - from))
                    .collect::<Result<Vec<_>>>()?;
                let mut limbs = crt_columns(&crt, &residues, 0, hi - from);
                let previous = if lo > 0 { limbs.remove(0) } else { Vec::new() };
                let mut out = Vec::with_capacity((hi - lo) * b);
                extract_digits(&previous, &limbs, self.params, lo * b, &mut out)?;
                out.truncate((hi * b).min(self.out_length) - lo * b);
                write_chunk(&path, &out, self.width)?;
                Ok(Some(path))
            })
            .collect::<Result<Vec<_>>>()?;
        record(&mut manifest, dir, written)?;

        CoeffTable::open_chunked(dir, PRODUCT_STEM, self.width, self.out_length, bpc * b)
    }
}

fn record(manifest: &mut Manifest, dir: &Path, written: Vec<Option<PathBuf>>) -> Result<()> {
    for path in written.into_iter().flatten() {
        manifest.record_file(&path)?;
    }
    manifest.save(dir)
}

/// CRT of columns `[start, end)` of prime-major residues, as 64-bit limbs.
fn crt_columns(tree: &ProductTree, residues: &[Vec<u64>], start: usize, end: usize) -> Vec<Vec<u64>> {
    (start..end)
        .into_par_iter()
        .map_init(
            || vec![0u64; residues.len()],
            |column, k| {
                for (c, r) in column.iter_mut().zip(residues) {
                    *c = r[k];
                }
                tree.reconstruct(column).to_u64_digits()
            },
        )
        .collect()
}

fn read_u64s(path: &Path, offset: usize, count: usize) -> Result<Vec<u64>> {
    let mut file = File::open(path)?;
    file.seek(SeekFrom::Start(offset as u64 * 8))?;
    let mut buf = vec![0u8; count * 8];
    file.read_exact(&mut buf).map_err(|_| Error::TruncatedChunk {
        path: path.to_path_buf(),
        expected: ((offset + count) * 8) as u64,
        found: std::fs::metadata(path).map_or(0, |m| m.len()),
    })?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{convolve_naive, generate, SeriesKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, len: usize, max: u64) -> CoeffTable {
        CoeffTable::from_values((0..len).map(|_| rng.gen_range(0..=max)).collect())
    }

    #[test]
    fn theta_cubed_prefix() {
        let t2 = generate(SeriesKind::Theta3Sq, 8, 8).unwrap();
        let t = generate(SeriesKind::Theta3, 8, 8).unwrap();
        let params = BundleParams::new(4, 8).unwrap();
        let basis = PrimeBasis::with_capacity(params.product_bits()).unwrap();
        let h = multiply(&t2, &t, params, &basis, &StagingConfig::in_memory()).unwrap();
        assert_eq!(h.to_vec().unwrap(), [1, 6, 12, 8, 6, 24, 24, 0]);
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_table(&mut rng, 100, 1000);
        let mut one = vec![0; 100];
        one[0] = 1;
        let one = CoeffTable::from_values(one);
        assert_eq!(multiply_exact(&x, &one, 100).unwrap(), x);
    }

    #[test]
    fn random_against_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for len in [1usize, 5, 64, 1000, 1 << 12] {
            let f = random_table(&mut rng, len, 255);
            let g = random_table(&mut rng, len, 255);
            let expected = convolve_naive(&f, &g, len).unwrap();
            assert_eq!(multiply_exact(&f, &g, len).unwrap(), expected, "len {len}");
        }
    }

    #[test]
    fn bundle_size_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_table(&mut rng, 3000, 3);
        let g = random_table(&mut rng, 2000, 3);
        let out: Vec<_> = [16usize, 64]
            .into_iter()
            .map(|b| {
                let p = BundleParams::for_inputs(&f, &g, b).unwrap();
                let basis = PrimeBasis::with_capacity(p.product_bits()).unwrap();
                multiply(&f, &g, p, &basis, &StagingConfig::in_memory()).unwrap()
            })
            .collect();
        assert_eq!(out[0], out[1]);
        assert_eq!(out[0], convolve_naive(&f, &g, 3000).unwrap());
    }

    #[test]
    fn staged_matches_memory_for_any_chunk_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_table(&mut rng, 2500, 15);
        let g = random_table(&mut rng, 2500, 15);
        let p = BundleParams::for_inputs(&f, &g, 16).unwrap();
        let basis = PrimeBasis::with_capacity(p.product_bits()).unwrap();
        let expected = multiply(&f, &g, p, &basis, &StagingConfig::in_memory()).unwrap();
        for m in [1usize, 3, 7, 1000] {
            let dir = tempfile::tempdir().unwrap();
            let cfg = StagingConfig::on_disk(dir.path(), m);
            let got = multiply(&f, &g, p, &basis, &cfg).unwrap();
            assert!(got.is_chunked());
            assert_eq!(got, expected, "m = {m}");
            // a second run reuses every staged file
            let again = multiply(&f, &g, p, &basis, &cfg).unwrap();
            assert_eq!(again, expected);
        }
    }

    #[test]
    fn staged_run_detects_corruption_and_recomputes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_table(&mut rng, 700, 7);
        let p = BundleParams::for_inputs(&f, &f, 8).unwrap();
        let basis = PrimeBasis::with_capacity(p.product_bits()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = StagingConfig::on_disk(dir.path(), 4);
        let first = multiply(&f, &f, p, &basis, &cfg).unwrap().to_vec().unwrap();
        let victim = chunk_path(dir.path(), "hres", Width::W8, 0);
        std::fs::write(&victim, b"garbage").unwrap();
        let second = multiply(&f, &f, p, &basis, &cfg).unwrap().to_vec().unwrap();
        assert_eq!(first, second);
        assert_eq!(first, convolve_naive(&f, &f, 700).unwrap().to_vec().unwrap());
    }

    #[test]
    fn crt_output_matches_each_prime() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_table(&mut rng, 512, 100);
        let p = BundleParams::for_inputs(&f, &f, 8).unwrap();
        let basis = PrimeBasis::with_capacity(p.product_bits()).unwrap();
        let bf = bundle(&f, p).unwrap();
        let res = reduce_mod_basis(&bf, &basis);
        let prods: Vec<Vec<u64>> = basis
            .primes()
            .iter()
            .zip(basis.roots())
            .zip(&res)
            .map(|((&q, &w), r)| ntt_mul(r, r, q, w, basis.log_len()).unwrap())
            .collect();
        let h = crt_reconstruct(&prods, &basis).unwrap();
        for _ in 0..20 {
            let k = rng.gen_range(0..h.len());
            for (i, &q) in basis.primes().iter().enumerate() {
                assert_eq!(&h[k] % q, num_bigint::BigUint::from(prods[i][k]));
            }
        }
        let out = unbundle_product(&h, p, 512).unwrap();
        assert_eq!(out, convolve_naive(&f, &f, 512).unwrap());
    }

    #[test]
    fn insufficient_capacity_is_rejected() {
        let f = CoeffTable::from_values(vec![1; 64]);
        let p = BundleParams::new(16, 20).unwrap();
        let basis = PrimeBasis::ntt(1).unwrap();
        let err = multiply(&f, &f, p, &basis, &StagingConfig::in_memory()).unwrap_err();
        assert!(matches!(err, Error::CrtCapacity { .. }));
    }
}
