// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::graph_heat::{dn_prime_kernel, glue_pieces, heat_kernel, interface_kernel, Side};
use crate::symlin;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line3() -> Graph {
    Graph::line(3, 1)
}

fn spec(class: PathClass, from: usize, to: usize, y: &[usize], max_length: usize) -> PathClassSpec {
    PathClassSpec {
        class,
        from,
        to,
        interface: y.to_vec(),
        max_length,
    }
}

/// Every vertex sequence of length ≤ `max_len`, filtered by the class
/// definitions written out directly.
fn brute_force(g: &Graph, s: &PathClassSpec) -> Vec<Vec<usize>> {
    let in_y: Vec<bool> = (0..g.n()).map(|v| s.interface.contains(&v)).collect();
    let mut out = Vec::new();
    for len in 0..=s.max_length {
        let total = g.n().pow(len as u32 + 1);
        for code in 0..total {
            let mut c = code;
            let seq: Vec<usize> = (0..=len)
                .map(|_| {
                    let v = c % g.n();
                    c /= g.n();
                    v
                })
                .collect();
            if seq[0] != s.from || seq[len] != s.to {
                continue;
            }
            if !seq.windows(2).all(|w| g.has_edge(w[0], w[1])) {
                continue;
            }
            let ys: Vec<usize> = (0..=len).filter(|&i| in_y[seq[i]]).collect();
            let keep = match s.class {
                PathClass::P => true,
                PathClass::Avoiding => ys.is_empty(),
                PathClass::PPrimeEnd => ys == vec![len],
                PathClass::PPrimeStart => ys == vec![0],
                PathClass::PDoublePrime => len >= 1 && ys == vec![0, len],
            };
            if keep {
                out.push(seq);
            }
        }
    }
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    out
}

fn random_graph(seed: u64, n: usize) -> Graph {
    Graph::random(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.5)
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn enumerate_examples() {
    let g = line3();
    let paths = enumerate(&g, &spec(PathClass::P, 0, 2, &[], 3)).unwrap();
    assert_eq!(paths, vec![Path::new(&g, vec![0, 1, 2]).unwrap()]);

    let loops = enumerate(&g, &spec(PathClass::PDoublePrime, 1, 1, &[1], 2)).unwrap();
    let want = vec![
        Path::new(&g, vec![1, 0, 1]).unwrap(),
        Path::new(&g, vec![1, 2, 1]).unwrap(),
    ];
    assert_eq!(loops, want);

    for class in [PathClass::P, PathClass::PPrimeEnd, PathClass::PDoublePrime, PathClass::Avoiding] {
        assert!(enumerate(&g, &spec(class, 0, 2, &[1], 0)).unwrap().is_empty());
    }
    assert!(matches!(
        enumerate(&g, &spec(PathClass::P, 0, 2, &[], 25)),
        Err(Error::CapExceeded { cap: 24, .. })
    ));
}

#[test]
fn enumerate_matches_brute_force() {
    let classes = [
        PathClass::P,
        PathClass::PPrimeEnd,
        PathClass::PPrimeStart,
        PathClass::PDoublePrime,
        PathClass::Avoiding,
    ];
    for seed in 0..4 {
        let g = random_graph(seed, 5);
        let y = [1, 3];
        for class in classes {
            for from in 0..5 {
                for to in 0..5 {
                    let s = spec(class, from, to, &y, 5);
                    let got: Vec<Vec<usize>> = enumerate(&g, &s)
                        .unwrap()
                        .into_iter()
                        .map(|p| p.vertices().to_vec())
                        .collect();
                    assert_eq!(got, brute_force(&g, &s), "{class:?} {from}->{to}");
                }
            }
        }
    }
}

#[test]
fn path_count_growth() {
    let g = random_graph(5, 6);
    let d = g.max_valency() as f64;
    for from in 0..g.n() {
        for to in 0..g.n() {
            let paths = enumerate(&g, &spec(PathClass::P, from, to, &[], 6)).unwrap();
            for len in 0..=6 {
                let c = paths.iter().filter(|p| p.length() == len).count();
                assert!(c as f64 <= d.powi(len as i32));
            }
        }
    }
}

#[test]
fn trimming_conventions() {
    let g = line3();
    let p = Path::new(&g, vec![0, 1, 2]).unwrap();
    assert_eq!(p.bar(), &[0, 1]);
    assert_eq!(p.underbar(), &[1, 2]);
    assert_eq!(p.interior(), Some(&[1][..]));
    let single = Path::new(&g, vec![1]).unwrap();
    assert!(single.bar().is_empty() && single.underbar().is_empty());
    assert_eq!(single.interior(), None);
    let edge = Path::new(&g, vec![0, 1]).unwrap();
    assert_eq!(edge.interior(), Some(&[][..]));
    assert!(Path::new(&g, vec![0, 2]).is_err());
    assert!(Path::new(&g, vec![]).is_err());
    assert!(Path::new(&g, vec![1, 1]).is_err());
}

#[test]
fn weight_examples() {
    let g = line3();
    assert_eq!(weight(&g, &Path::new(&g, vec![1]).unwrap()).unwrap(), ExpMix::exp(1.0, 2.0));
    let w = weight(&g, &Path::new(&g, vec![0, 1, 2]).unwrap()).unwrap();
    let want = ExpMix::term(1.0, 1, 1.0)
        .add(&ExpMix::exp(-1.0, 1.0))
        .add(&ExpMix::exp(1.0, 2.0));
    assert!(w.max_coef_diff(&want) < 1e-14);
    // two-step quadrature: (e^{-s} * e^{-2s})(r), then convolved with e^{-s}
    for t in [0.3f64, 1.0, 2.5] {
        let inner = |r: f64| simpson(|s| (-s).exp() * (-2.0 * (r - s)).exp(), 0.0, r, 200);
        let outer = simpson(|r| inner(r) * (-(t - r)).exp(), 0.0, t, 200);
        assert!((w.evaluate(t).unwrap() - outer).abs() < 1e-9);
    }
    assert_eq!(weight_of(&g, &[]).unwrap(), ExpMix::delta(1.0));
}

#[test]
fn numeric_weight_matches_expmix() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_graph(11, 7);
    for _ in 0..30 {
        let mut v = vec![rng.gen_range(0..g.n())];
        if g.neighbors(v[0]).is_empty() {
            continue;
        }
        for _ in 0..rng.gen_range(0..9) {
            let nb = g.neighbors(*v.last().unwrap());
            v.push(nb[rng.gen_range(0..nb.len())]);
        }
        let p = Path::new(&g, v).unwrap();
        let w = weight(&g, &p).unwrap();
        for t in [0.1, 0.7, 2.0, 6.0] {
            let a = weight_value(&g, &p, t).unwrap();
            let b = w.evaluate(t).unwrap();
            assert!(a > 0.0);
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()) + 1e-15, "{a} vs {b}");
        }
    }
}

#[test]
fn pathsum_heat_line() {
    let g = line3();
    let r = pathsum_heat(&g, 0, 2, 1.0, 1e-8).unwrap();
    let exact = ((-3.0f64).exp() - 3.0 * (-1.0f64).exp() + 2.0) / 6.0;
    assert!((r.value - exact).abs() <= 1e-8);
    assert!(r.value <= exact && exact <= r.value + r.tail_bound);
    let tiny = pathsum_heat(&g, 1, 1, 1e-6, 1e-12).unwrap();
    assert!((tiny.value - 1.0).abs() < 1e-5);
}

#[test]
fn pathsum_heat_matches_taylor() {
    for seed in 0..5 {
        let g = random_graph(seed, 5);
        let t = 0.5;
        let eps = 1e-10;
        let oracle = symlin::expm_taylor(&(g.laplacian().as_matrix() * -t));
        for u in 0..5 {
            for v in 0..5 {
                let r = pathsum_heat(&g, u, v, t, eps).unwrap();
                assert!((r.value - oracle[(u, v)]).abs() <= eps.max(1e-9));
                for w in r.partial_sums.windows(2) {
                    assert!(w[1] >= w[0]);
                }
            }
        }
    }
}

#[test]
fn pathsum_heat_cap_and_modes() {
    let g = random_graph(2, 6);
    let err = pathsum_heat(&g, 0, 1, 10.0, 1e-12).unwrap_err();
    match err {
        Error::CapExceeded { cap, best_bound } => {
            assert_eq!(cap, DEFAULT_CAP);
            assert!(best_bound >= 1e-12);
        }
        e => panic!("unexpected {e:?}"),
    }
    assert!(pathsum_heat(&g, 0, 1, 0.0, 1e-8).is_err());
    assert!(pathsum_heat(&g, 0, 1, 1.0, 0.0).is_err());

    let oracle = symlin::expm_taylor(&(g.laplacian().as_matrix() * -0.7));
    let crude = pathsum_heat(&g, 0, 3, 0.7, 1e-9).unwrap();
    let opts = PathSumOptions {
        tail: TailMode::WalkCount,
        ..Default::default()
    };
    let sharp = pathsum_heat_with(&g, 0, 3, 0.7, 1e-9, &opts).unwrap();
    assert!(sharp.cutoff <= crude.cutoff);
    for r in [crude, sharp] {
        let gap = oracle[(0, 3)] - r.value;
        assert!(gap >= -1e-14 && gap <= r.tail_bound + 1e-14);
    }
}

fn line_split() -> Decomposition {
    Decomposition::from_labels(&line3(), &["2"], None, None).unwrap()
}

#[test]
fn operator_examples() {
    let two = Decomposition::from_labels(&Graph::line(2, 1), &["2"], None, None).unwrap();
    let ext = pathsum_operators(&two, Operator::Extension, 6).unwrap();
    assert_eq!(ext.kernel.entry("1", "2").unwrap(), &ExpMix::exp(1.0, 1.0));
    assert_eq!(ext.kernel.entry("2", "2").unwrap(), &ExpMix::delta(1.0));

    let d = line_split();
    let dp = pathsum_operators(&d, Operator::DnPrime, 2).unwrap();
    assert_eq!(dp.kernel.get(0, 0), &ExpMix::exp(2.0, 1.0));
    assert!(dp.kernel.max_coef_diff(&dn_prime_kernel(&d).unwrap()) < 1e-15);

    let iface = pathsum_operators(&d, Operator::Interface, 12).unwrap();
    let t = 1.0f64;
    let exact = (1.0 + 2.0 * (-3.0 * t).exp()) / 3.0;
    let got = iface.evaluate(t).unwrap()[(0, 0)];
    assert!((iface.kernel.get(0, 0).evaluate(t).unwrap() - got).abs() < 1e-12);
    assert!(got <= exact && exact - got <= iface.tail_bound(t).unwrap());
}

#[test]
fn operators_match_linear_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..4 {
        let d = Decomposition::random(&mut rng, 4, 6, 0.5);
        let (_, ext_la) = glue_pieces(&d).unwrap();
        let iface_la = interface_kernel(&d).unwrap();
        let dp_la = dn_prime_kernel(&d).unwrap();
        let ext = pathsum_operators(&d, Operator::Extension, 14).unwrap();
        let iface = pathsum_operators(&d, Operator::Interface, 14).unwrap();
        let dp = pathsum_operators(&d, Operator::DnPrime, 14).unwrap();
        for t in [0.1, 0.3] {
            for (ps, la) in [(&ext, &ext_la), (&iface, &iface_la), (&dp, &dp_la)] {
                let bound = ps.tail_bound(t).unwrap();
                let diff = (ps.evaluate(t).unwrap() - la.evaluate(t).unwrap()).amax();
                assert!(diff <= bound + 1e-12, "{:?}: {diff} > {bound}", ps.which);
                for (a, b) in ps.kernel.entries().iter().zip(la.entries()) {
                    assert!((a.atom() - b.atom()).abs() < 1e-15);
                }
            }
        }
    }
    let _ = Side::One;
}

#[test]
fn split_examples() {
    let g = line3();
    let p1 = Path::new(&g, vec![0, 1]).unwrap();
    let p2 = Path::new(&g, vec![1, 2]).unwrap();
    assert!(split_check(&g, &p1, &p2).unwrap() < 1e-12);
    let p0 = Path::new(&g, vec![1]).unwrap();
    assert!(split_check(&g, &p1, &p0).unwrap() < 1e-12);
    assert!(split_check(&g, &p2, &p1).is_err());
}

fn random_path(g: &Graph, rng: &mut ChaCha8Rng, max_len: usize) -> Option<Path> {
    let start = rng.gen_range(0..g.n());
    if g.neighbors(start).is_empty() {
        return None;
    }
    let mut v = vec![start];
    for _ in 0..rng.gen_range(0..=max_len) {
        let nb = g.neighbors(*v.last().unwrap());
        v.push(nb[rng.gen_range(0..nb.len())]);
    }
    Some(Path::new(g, v).unwrap())
}

#[test]
fn interface_split_round_trip() {
    let d = Decomposition::random(&mut ChaCha8Rng::seed_from_u64(4), 6, 8, 0.5);
    let g = d.graph();
    let y = d.interface_indices();
    let in_y: Vec<bool> = (0..g.n()).map(|v| d.is_interface(v)).collect();
    for u in 0..g.n() {
        for v in 0..g.n() {
            for p in enumerate(g, &spec(PathClass::P, u, v, &[], 5)).unwrap() {
                match p.split_at_interface(&in_y) {
                    None => assert!(p.vertices().iter().all(|&x| !in_y[x])),
                    Some((a, b, c)) => {
                        let check = |q: &Path, class: PathClass| {
                            let s = spec(class, q.start(), q.end(), &y, q.length());
                            enumerate(g, &s).unwrap().contains(q)
                        };
                        assert!(check(&a, PathClass::PPrimeEnd));
                        assert!(check(&c, PathClass::PPrimeStart));
                        assert!(in_y[b.start()] && in_y[b.end()]);
                        assert_eq!(a.concat(&b).unwrap().concat(&c).unwrap(), p);
                    }
                }
            }
        }
    }
}

/// Cutting a path at every interface visit and convolving the barred pieces.
#[test]
fn weight_by_iterated_cutting() {
    let d = Decomposition::random(&mut ChaCha8Rng::seed_from_u64(8), 8, 10, 0.5);
    let g = d.graph();
    let in_y: Vec<bool> = (0..g.n()).map(|v| d.is_interface(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tested = 0;
    while tested < 20 {
        let Some(p) = random_path(g, &mut rng, 10) else {
            continue;
        };
        let cuts: Vec<usize> = (0..p.vertices().len()).filter(|&i| in_y[p.vertices()[i]]).collect();
        if cuts.len() < 2 {
            continue;
        }
        tested += 1;
        // pieces v[0..=c₁], v[c₁..=c₂], …, v[c_m..]; all but the last barred
        let vs = p.vertices();
        let mut bounds = vec![0];
        bounds.extend(&cuts);
        let mut acc = ExpMix::delta(1.0);
        for w in bounds.windows(2) {
            acc = acc.convolve(&weight_of(g, &vs[w[0]..w[1]]).unwrap()).unwrap();
        }
        let last = *cuts.last().unwrap();
        acc = acc.convolve(&weight_of(g, &vs[last..]).unwrap()).unwrap();
        let direct = weight(g, &p).unwrap();
        for t in [0.2, 1.0, 3.0] {
            let diff = (acc.evaluate(t).unwrap() - direct.evaluate(t).unwrap()).abs();
            assert!(diff < 1e-10, "{:?}: {diff}", p.vertices());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_property(seed in any::<u64>(), cut in 0usize..8) {
        let g = random_graph(seed, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        if let Some(p) = random_path(&g, &mut rng, 8) {
            let c = cut.min(p.length());
            let a = Path::new(&g, p.vertices()[..=c].to_vec()).unwrap();
            let b = Path::new(&g, p.vertices()[c..].to_vec()).unwrap();
            prop_assert!(split_check(&g, &a, &b).unwrap() < 1e-11);
        }
    }

    #[test]
    fn weights_are_positive(seed in any::<u64>()) {
        let g = random_graph(seed, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(p) = random_path(&g, &mut rng, 10) {
            let w = weight(&g, &p).unwrap();
            for t in [0.01, 0.1, 1.0, 5.0, 20.0] {
                let v = weight_value(&g, &p, t).unwrap();
                prop_assert!(v > 0.0);
                prop_assert!((w.evaluate(t).unwrap() - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn partial_sums_increase(seed in any::<u64>(), t in 0.05f64..1.0) {
        let g = random_graph(seed, 5);
        let r = pathsum_heat(&g, 0, 4, t, 1e-9).unwrap();
        for w in r.partial_sums.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        let exact = heat_kernel(&g).unwrap().get(0, 4).evaluate(t).unwrap();
        prop_assert!(exact - r.value >= -1e-13 && exact - r.value <= r.tail_bound + 1e-13);
    }
}
