//! One L-step against a direct implementation for `p <= 2`: closed-form
//! inverse, lexicographic sort of `(d_i, i)` pairs and a plain weighted sum.
//! Cases include structural ties, since a two-point center is equidistant
//! from both points.

use affinest::{l_step, mean_state, DistributionSpec, Sample, Sampler, WeightScheme, TIE_TOL};

fn brute_force_step(sample: &Sample, center: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let p = sample.p();
    let mut a = [[0.0; 2]; 2];
    for x in sample.rows() {
        for r in 0..p {
            for c in 0..p {
                a[r][c] += (x[r] - center[r]) * (x[c] - center[c]);
            }
        }
    }
    let dist = |x: &[f64]| -> f64 {
        if p == 1 {
            let u = x[0] - center[0];
            u * u / a[0][0]
        } else {
            let (u, v) = (x[0] - center[0], x[1] - center[1]);
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            (a[1][1] * u * u - 2.0 * a[0][1] * u * v + a[0][0] * v * v) / det
        }
    };
    let mut pairs: Vec<(f64, usize)> = sample.rows().enumerate().map(|(i, x)| (dist(x), i)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // Near-equal neighbours form one tie, ordered by index.
    let mut groups: Vec<Vec<(f64, usize)>> = Vec::new();
    for pair in pairs {
        match groups.last_mut() {
            Some(g) if pair.0 - g.last().unwrap().0 <= TIE_TOL => g.push(pair),
            _ => groups.push(vec![pair]),
        }
    }
    let pairs: Vec<(f64, usize)> = groups
        .into_iter()
        .flat_map(|mut g| {
            g.sort_by_key(|q| q.1);
            g
        })
        .collect();
    let mut ranks = vec![0; sample.n()];
    let mut out = vec![0.0; p];
    for (pos, &(_, i)) in pairs.iter().enumerate() {
        ranks[i] = pos + 1;
        if weights[pos] != 0.0 {
            for j in 0..p {
                out[j] += weights[pos] * sample.row(i)[j];
            }
        }
    }
    (out, ranks)
}

#[test]
fn l_step_matches_sorted_pairs() {
    let mut cases = 0;
    for seed in 0..500u64 {
        let p = 1 + (seed % 2) as usize;
        let n = p + 2 + (seed % (7 - p as u64)) as usize;
        assert!(n <= 8);
        let sample = Sampler::new(DistributionSpec::standard_normal(p))
            .unwrap()
            .sample_stream(n, seed, 7)
            .unwrap();
        let k_n = 1 + (seed as usize % n);
        let scheme = match seed % 3 {
            0 => WeightScheme::TrimmedL1 { k_n },
            1 => WeightScheme::RankWeightedL2 { k_n: k_n.max(2) },
            _ => WeightScheme::Poisson { lambda: 0.5 },
        };
        let w = scheme.weights(n).unwrap();
        let s0 = mean_state(&sample).unwrap();
        let (_, ranks0) = brute_force_step(&sample, &s0.center, &w);
        assert_eq!(ranks0, s0.ranks, "seed {seed}");

        let s1 = l_step(&sample, &s0, &scheme).unwrap();
        let (center, _) = brute_force_step(&sample, &s0.center, &w);
        assert_eq!(center, s1.center, "seed {seed}");
        let (_, ranks1) = brute_force_step(&sample, &s1.center, &w);
        assert_eq!(ranks1, s1.ranks, "seed {seed}");
        cases += 1;
    }
    assert_eq!(cases, 500);
}
