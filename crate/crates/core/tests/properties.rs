use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use parmor_core::analysis::moments::relative_deviations;
use parmor_core::analysis::{gen_bench, monte_carlo_poles, oracle_moments, BenchSpec, TransferModel, Variation};
use parmor_core::netlist::parse_netlist;
use parmor_core::numkern::lu::lu_factor;
use parmor_core::numkern::sparse::SparseMatrix;
use parmor_core::numkern::Counters;
use parmor_core::{load, project, reduce, Engine, ParameterPoint, ParametricSystem, ReductionSpec};

/// Optional `(parameter, sensitivity)` attached to an element.
type Sens = Option<(usize, f64)>;

/// Random connected RC deck on unit-scale values. Node `i` is written as
/// `names[i]`, elements in the order given by `order`.
#[derive(Debug, Clone)]
struct RcDeck {
    n: usize,
    ports: usize,
    params: usize,
    /// `(a, b, r, sens)` with node 0 as ground.
    resistors: Vec<(usize, usize, f64, Sens)>,
    caps: Vec<(usize, f64, Sens)>,
}

impl RcDeck {
    fn text(&self, names: &[String], order: &[usize]) -> String {
        let node = |i: usize| if i == 0 { "0".to_string() } else { names[i - 1].clone() };
        let pnames: Vec<String> = (1..=self.params).map(|i| format!("w{i}")).collect();
        let mut s = String::new();
        if self.params > 0 {
            s += &format!(".param {}\n", pnames.join(" "));
        }
        for p in 0..self.ports {
            s += &format!("P{} {} 0\n", p + 1, node(p + 1));
        }
        let mut lines = Vec::new();
        for (a, b, r, sens) in &self.resistors {
            let tail = sens.map_or(String::new(), |(i, v)| format!(" SENSG {}={v:e}", pnames[i]));
            lines.push((format!("{} {} {r:e}", node(*a), node(*b)), 'R', tail));
        }
        for (a, c, sens) in &self.caps {
            let tail = sens.map_or(String::new(), |(i, v)| format!(" SENSC {}={v:e}", pnames[i]));
            lines.push((format!("{} 0 {c:e}", node(*a)), 'C', tail));
        }
        for (k, &i) in order.iter().enumerate() {
            let (body, kind, tail) = &lines[i];
            s += &format!("{kind}{} {body}{tail}\n", k + 1);
        }
        s
    }

    fn plain(&self) -> String {
        let names: Vec<String> = (1..=self.n).map(|i| i.to_string()).collect();
        let order: Vec<usize> = (0..self.resistors.len() + self.caps.len()).collect();
        self.text(&names, &order)
    }

    fn elements(&self) -> usize {
        self.resistors.len() + self.caps.len()
    }
}

fn sens_strategy(params: usize) -> BoxedStrategy<Sens> {
    if params == 0 {
        Just(None).boxed()
    } else {
        prop_oneof![Just(None), (0..params, 0.05f64..0.5).prop_map(Some)].boxed()
    }
}

fn rc_deck(max_n: usize) -> impl Strategy<Value = RcDeck> {
    (2..=max_n, 1usize..=2, 0usize..=2).prop_flat_map(|(n, ports, params)| {
        let chain = proptest::collection::vec((0.5f64..5.0, sens_strategy(params)), n - 1);
        let extra = proptest::collection::vec((1..=n, 1..=n, 0.5f64..5.0, sens_strategy(params)), 0..n);
        let caps = proptest::collection::vec((0.5f64..5.0, sens_strategy(params)), n);
        (
            Just(n),
            Just(ports.min(n)),
            Just(params),
            chain,
            extra,
            caps,
            0.2f64..2.0,
        )
            .prop_map(|(n, ports, params, chain, extra, caps, ground)| {
                let mut resistors: Vec<_> = chain
                    .into_iter()
                    .enumerate()
                    .map(|(i, (r, s))| (i + 1, i + 2, r, s))
                    .collect();
                resistors.extend(extra.into_iter().filter(|(a, b, _, _)| a != b));
                resistors.push((n, 0, ground, None));
                let caps = caps.into_iter().enumerate().map(|(i, (c, s))| (i + 1, c, s)).collect();
                RcDeck {
                    n,
                    ports,
                    params,
                    resistors,
                    caps,
                }
            })
    })
}

fn point(n_p: usize, v: f64) -> ParameterPoint {
    ParameterPoint((0..n_p).map(|i| if i % 2 == 0 { v } else { -v }).collect())
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

const S: Complex64 = Complex64::new(0.05, 0.3);

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deck_text_round_trips(deck in rc_deck(12)) {
        let ast = parse_netlist(&deck.plain()).unwrap();
        let again = parse_netlist(&ast.to_text()).unwrap();
        prop_assert_eq!(&ast, &again);
        let a = load(&deck.plain()).unwrap();
        let b = load(&ast.to_text()).unwrap();
        prop_assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn renaming_nodes_and_reordering_elements_keeps_the_response(
        (deck, perm, order) in rc_deck(10).prop_flat_map(|d| {
            let names = Just((0..d.n).collect::<Vec<_>>()).prop_shuffle();
            let order = Just((0..d.elements()).collect::<Vec<_>>()).prop_shuffle();
            (Just(d), names, order)
        })
    ) {
        let names: Vec<String> = perm.iter().map(|i| format!("n{i}")).collect();
        let a = load(&deck.plain()).unwrap();
        let b = load(&deck.text(&names, &order)).unwrap();
        let p = point(deck.params, 0.2);
        let (ha, hb) = (a.transfer(&p, S).unwrap(), b.transfer(&p, S).unwrap());
        prop_assert!(max_abs_diff(&ha, &hb) <= 1e-10 * max_abs(&ha), "{ha} vs {hb}");
    }

    #[test]
    fn rc_transfer_is_reciprocal(deck in rc_deck(10), v in -0.5f64..0.5) {
        let sys = load(&deck.plain()).unwrap();
        let h = sys.transfer(&point(deck.params, v), S).unwrap();
        prop_assert!(max_abs_diff(&h, &h.transpose()) <= 1e-12 * max_abs(&h));
    }

    #[test]
    fn transpose_solve_is_the_adjoint(deck in rc_deck(14), seed in 0u64..1000) {
        let sys = load(&deck.plain()).unwrap();
        let (g, c) = sys.assemble_at(&ParameterPoint::nominal(deck.params)).unwrap();
        // Nonsymmetric but still nonsingular.
        let n = sys.n();
        let skew = SparseMatrix::from_triplets(n, n, (1..n).map(|i| (i - 1, i, 0.1 * ((seed + i as u64) % 7) as f64)));
        let a = g.add_scaled(&c, 0.7).add_scaled(&skew, 1.0);
        let lu = lu_factor(&a, &Counters::new()).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed) % 11) as f64 - 5.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i as u64 * 17 + seed) % 13) as f64 - 6.0).collect();
        // ⟨A⁻¹x, y⟩ = ⟨x, A⁻ᵀy⟩
        let lhs: f64 = lu.solve_vec(&x).iter().zip(&y).map(|(u, v)| u * v).sum();
        let rhs: f64 = x.iter().zip(lu.solve_transpose_vec(&y)).map(|(u, v)| u * v).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn projection_commutes_with_assembly(deck in rc_deck(12), v in -0.5f64..0.5, seed in 0u64..100) {
        let sys = load(&deck.plain()).unwrap();
        let spec = ReductionSpec { seed, ..ReductionSpec::new(Engine::LowRank, 1) };
        let model = reduce(&sys, &spec).unwrap().model;
        let p = point(deck.params, v);
        let (g, c) = sys.assemble_at(&p).unwrap();
        let basis = &model.basis;
        let (gr, cr) = model.assemble_at(&p).unwrap();
        let want_g = basis.transpose() * g.to_dense() * basis;
        let want_c = basis.transpose() * c.to_dense() * basis;
        prop_assert!((gr - &want_g).amax() <= 1e-12 * want_g.amax());
        prop_assert!((cr - &want_c).amax() <= 1e-12 * want_c.amax());
    }

    #[test]
    fn full_dimension_basis_is_exact(deck in rc_deck(10), v in -0.5f64..0.5) {
        let sys = load(&deck.plain()).unwrap();
        let model = project(&sys, &DMatrix::identity(sys.n(), sys.n())).unwrap();
        let spanning = reduce(&sys, &ReductionSpec::new(Engine::Prima, 3 * sys.n())).unwrap().model;
        let p = point(deck.params, v);
        let h = sys.transfer(&p, S).unwrap();
        prop_assert!(max_abs_diff(&h, &model.transfer(&p, S).unwrap()) <= 1e-12 * max_abs(&h));
        if spanning.q() == sys.n() {
            prop_assert!(max_abs_diff(&h, &spanning.transfer(&p, S).unwrap()) <= 1e-9 * max_abs(&h));
        }
    }
}

/// Single-parameter RC ladder with unit-scale values for derivative checks.
fn small_ladder(n: usize, n_p: usize) -> ParametricSystem {
    let mut s = String::from(".param");
    for i in 1..=n_p {
        s += &format!(" w{i}");
    }
    s += "\nP1 1 0\n";
    for i in 1..=n {
        let next = if i == n { "0".to_string() } else { (i + 1).to_string() };
        let w = 1 + (i - 1) * n_p / n;
        s += &format!("R{i} {i} {next} {} SENSG w{w}=0.{i}\n", 1.0 + 0.1 * i as f64);
        s += &format!("C{i} {i} 0 {} SENSC w{w}=0.3\n", 1.0 + 0.05 * i as f64);
    }
    load(&s).unwrap()
}

fn h_real(sys: &ParametricSystem, p: &ParameterPoint, s: f64) -> f64 {
    sys.transfer(p, Complex64::new(s, 0.0)).unwrap()[(0, 0)].re
}

#[test]
fn first_moments_match_finite_differences() {
    let sys = small_ladder(10, 2);
    let dense = sys.to_dense(100).unwrap();
    let table = oracle_moments(&dense, 1).unwrap().output(&dense.l);
    let nominal = ParameterPoint::nominal(2);
    let fd = |f: &dyn Fn(f64) -> f64| {
        // Best central difference over a range of steps.
        [1e-4, 1e-5, 1e-6, 1e-7].map(|h| (f(h) - f(-h)) / (2.0 * h))
    };
    let ds = fd(&|h| h_real(&sys, &nominal, h));
    let dp1 = fd(&|h| h_real(&sys, &ParameterPoint(vec![h, 0.0]), 0.0));
    let dp2 = fd(&|h| h_real(&sys, &ParameterPoint(vec![0.0, h]), 0.0));
    for (idx, est) in [(vec![1, 0, 0], ds), (vec![0, 1, 0], dp1), (vec![0, 0, 1], dp2)] {
        let m = table.get(&idx).unwrap()[(0, 0)];
        let best = est.iter().map(|e| (e - m).abs()).fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-6 * m.abs(), "{idx:?}: moment {m}, differences {est:?}");
    }
}

#[test]
fn low_rank_error_shrinks_with_rank() {
    let sys = gen_ladder(60, 2, 11);
    let dense = sys.to_dense(100).unwrap();
    let reference = oracle_moments(&dense, 3).unwrap().output(&dense.l);
    let mut errors = Vec::new();
    for r in [1, 2, 4, 60] {
        let spec = ReductionSpec {
            svd_rank: r,
            ..ReductionSpec::new(Engine::LowRank, 3)
        };
        let model = reduce(&sys, &spec).unwrap().model;
        let got = oracle_moments(&model.system, 3).unwrap().output(&model.system.l);
        let worst = relative_deviations(&reference, &got)
            .into_iter()
            .map(|(_, d)| d)
            .fold(0.0, f64::max);
        errors.push(worst);
    }
    assert!(errors[3] <= 1e-8, "{errors:?}");
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] * 1.01 + 1e-12, "{errors:?}");
    }
}

fn gen_ladder(n: usize, params: usize, seed: u64) -> ParametricSystem {
    load(&gen_bench(&BenchSpec::RcLadder {
        n,
        ports: 1,
        params,
        seed,
    }))
    .unwrap()
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let sys = gen_ladder(80, 2, 3);
    let model = reduce(&sys, &ReductionSpec::new(Engine::LowRank, 3)).unwrap().model;
    let variation = Variation::three_sigma(&[0.3, 0.3]);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_poles(&sys, &model, &variation, 24, 3, 9).unwrap().to_csv())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.lines().count(), 1 + 24 * 3);
}
