use super::{WeightedGraph, MAX_ENTRIES};
use crate::error::{Error, Result};
use std::collections::HashSet;

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

/// All `r`-subsets of `0..n` as sorted index vectors, in lexicographic order.
pub fn subsets_of_size(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut c: Vec<usize> = (0..r).collect();
    loop {
        out.push(c.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..r {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn integral(alpha: f64, l: usize) -> Result<usize> {
    let m = alpha * l as f64;
    let r = m.round();
    if (m - r).abs() > 1e-9 {
        return Err(Error::Parameter(format!("alpha * l = {m} is not an integer")));
    }
    Ok(r as usize)
}

/// Noisy hypercube on `{+-1}^d`: `w(u, v) = eps^dist (1 - eps)^(d - dist)`.
pub fn noisy_hypercube(d: usize, eps: f64) -> Result<WeightedGraph> {
    if d == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if d > 16 {
        return Err(Error::size("hypercube dimension", d, 16));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter(format!("noise {eps} outside [0, 1]")));
    }
    let n = 1usize << d;
    let nonzero = if eps == 0.0 { n } else if eps == 1.0 { n } else { n * n };
    if nonzero > MAX_ENTRIES {
        return Err(Error::size("stored weights", nonzero, MAX_ENTRIES));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u..n {
            let dist = (u ^ v).count_ones() as i32;
            let w = eps.powi(dist) * (1.0 - eps).powi(d as i32 - dist);
            edges.push((u, v, w));
        }
    }
    let labels = (0..n)
        .map(|u| (0..d).map(|i| if u >> i & 1 == 1 { '-' } else { '+' }).collect())
        .collect();
    Ok(WeightedGraph::from_edges(n, edges)?.with_labels(labels))
}

/// Truth table (bit x set iff the function is 1 at x) to algebraic normal form.
fn anf(n: usize, table: u32) -> u32 {
    let mut c = table;
    for i in 0..n {
        for x in 0..(1u32 << n) {
            if x >> i & 1 == 1 && c >> (x ^ (1 << i)) & 1 == 1 {
                c ^= 1 << x;
            }
        }
    }
    c
}

fn affine_table(n: usize, a: u32, c: u32) -> u32 {
    let mut t = 0;
    for x in 0..(1u32 << n) {
        if ((a & x).count_ones() + c) % 2 == 1 {
            t |= 1 << x;
        }
    }
    t
}

fn rank_f2(vs: &[u32]) -> usize {
    let mut basis: Vec<u32> = Vec::new();
    for &v in vs {
        let mut x = v;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Noisy short-code graph: vertices are polynomials of degree at most `d` over
/// `F_2^n`; `p ~ q` iff `p - q` is a product of `d` affine forms with linearly
/// independent linear parts. Weights are the `t`-step walk matrix.
pub fn shortcode_graph(d: usize, n: usize, t: usize) -> Result<WeightedGraph> {
    if d < 1 || d >= n || n > 4 {
        return Err(Error::size("short-code parameters (need 1 <= d < n <= 4)", n, 4));
    }
    // monomials of degree <= d, indexed; a polynomial is a bitmask over them
    let mut monos: Vec<u32> = (0..(1u32 << n)).filter(|m| m.count_ones() as usize <= d).collect();
    monos.sort_by_key(|m| (m.count_ones(), *m));
    let m = monos.len();
    if m > 12 {
        return Err(Error::size("short-code vertices", 1u128 << m, 1u128 << 12));
    }
    let index_of = |anf_mask: u32| -> u32 {
        let mut p = 0;
        for (i, &mono) in monos.iter().enumerate() {
            if anf_mask >> mono & 1 == 1 {
                p |= 1 << i;
            }
        }
        p
    };
    let forms: Vec<(u32, u32)> = (1..(1u32 << n)).flat_map(|a| [(a, 0), (a, 1)]).collect();
    let mut products: HashSet<u32> = HashSet::new();
    let mut pick = vec![0usize; d];
    fn rec(
        depth: usize,
        start: usize,
        pick: &mut Vec<usize>,
        forms: &[(u32, u32)],
        n: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == pick.len() {
            out.push(pick.clone());
            return;
        }
        for i in start..forms.len() {
            pick[depth] = i;
            rec(depth + 1, i + 1, pick, forms, n, out);
        }
    }
    let mut combos = Vec::new();
    rec(0, 0, &mut pick, &forms, n, &mut combos);
    for combo in combos {
        let lin: Vec<u32> = combo.iter().map(|&i| forms[i].0).collect();
        if rank_f2(&lin) < d {
            continue;
        }
        let table = combo.iter().fold(u32::MAX >> (32 - (1 << n)), |acc, &i| {
            acc & affine_table(n, forms[i].0, forms[i].1)
        });
        products.insert(index_of(anf(n, table)));
    }
    let nv = 1usize << m;
    let mut base = vec![0.0; nv * nv];
    for p in 0..nv {
        for &q in &products {
            base[p * nv + (p ^ q as usize)] = 1.0;
        }
    }
    let deg = products.len() as f64;
    let walk: Vec<f64> = base.iter().map(|w| w / deg).collect();
    let mut cur = vec![0.0; nv * nv];
    for i in 0..nv {
        cur[i * nv + i] = 1.0;
    }
    for _ in 0..t {
        cur = matmul(nv, &cur, &walk);
    }
    // symmetrize round-off
    for i in 0..nv {
        for j in i + 1..nv {
            let s = 0.5 * (cur[i * nv + j] + cur[j * nv + i]);
            cur[i * nv + j] = s;
            cur[j * nv + i] = s;
        }
    }
    let labels = (0..nv).map(|p| format!("{p:0width$b}", width = m)).collect();
    Ok(WeightedGraph::from_dense(nv, &cur)?.with_labels(labels))
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == 0.0 {
                continue;
            }
            let bk = &b[k * n..(k + 1) * n];
            let ci = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                ci[j] += x * bk[j];
            }
        }
    }
    c
}

/// Johnson graph on `l`-subsets of `[n]`, adjacent iff they share `(1 - alpha) l` elements.
pub fn johnson_graph(n: usize, l: usize, alpha: f64) -> Result<WeightedGraph> {
    if l == 0 || l >= n {
        return Err(Error::Parameter(format!("need 0 < l < n, got l = {l}, n = {n}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let moved = integral(alpha, l)?;
    let count = binom(n, l);
    if count > 1e5 {
        return Err(Error::size("C(n, l)", count as u128, 100_000));
    }
    let sets = subsets_of_size(n, l);
    let masks: Vec<u64> = sets.iter().map(|s| s.iter().fold(0u64, |m, &i| m | 1 << i)).collect();
    let shared = l - moved;
    let mut edges = Vec::new();
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            if (masks[i] & masks[j]).count_ones() as usize == shared {
                edges.push((i, j, 1.0));
            }
        }
    }
    let labels = sets
        .iter()
        .map(|s| format!("{{{}}}", s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    Ok(WeightedGraph::from_edges(masks.len(), edges)?.with_labels(labels))
}

/// Tuple `x in [n]^l` encoded base `n`, first coordinate most significant.
pub(crate) fn decode_tuple(mut idx: usize, n: usize, l: usize) -> Vec<usize> {
    let mut x = vec![0; l];
    for i in (0..l).rev() {
        x[i] = idx % n;
        idx /= n;
    }
    x
}

pub(crate) fn encode_tuple(x: &[usize], n: usize) -> usize {
    x.iter().fold(0, |acc, &c| acc * n + c)
}

/// Cayley graph on `[n]^l`: one step resamples a uniformly random
/// `alpha l`-subset of coordinates uniformly from `[n]`.
pub fn johnson_cayley_graph(n: usize, l: usize, alpha: f64) -> Result<WeightedGraph> {
    if n < 2 || l == 0 {
        return Err(Error::Parameter(format!("need n >= 2 and l >= 1, got n = {n}, l = {l}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let m = integral(alpha, l)?;
    let size = (n as f64).powi(l as i32);
    if size > 1e5 {
        return Err(Error::size("n^l", size as u128, 100_000));
    }
    let nv = size as usize;
    let masks = subsets_of_size(l, m);
    let p_each = 1.0 / (masks.len() as f64 * (n as f64).powi(m as i32));
    let mut edges = Vec::new();
    for xi in 0..nv {
        let x = decode_tuple(xi, n, l);
        for b in &masks {
            for r in 0..n.pow(m as u32) {
                let vals = decode_tuple(r, n, m);
                let mut y = x.clone();
                for (slot, &pos) in b.iter().enumerate() {
                    y[pos] = vals[slot];
                }
                let yi = encode_tuple(&y, n);
                if yi >= xi {
                    edges.push((xi, yi, p_each));
                }
            }
        }
    }
    let labels = (0..nv)
        .map(|i| format!("({})", decode_tuple(i, n, l).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    Ok(WeightedGraph::from_edges(nv, edges)?.with_labels(labels))
}
