// Temporary probe: derivative sign structure and optimizer convergence at
// the production workload (rate 90/s, service 0.01 s, horizon 20 s).
use lossq_core::*;

fn main() {
    let (rate, s, t_f, a) = (90.0, 0.01, 20.0, 0.2);

    // Replication means of the surrogate cost derivative per buffer size.
    for k in 1..=12u32 {
        let params = QueueParams::new(k, s, t_f).unwrap();
        let reps = 50;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let seed = rng::derive_seed(4242, (k as u64) * 10_000 + r as u64);
            let trace = generate_poisson_trace(rate, t_f, seed).unwrap();
            let sim = simulate(&trace, &params).unwrap();
            vals.push(cost_derivative(&sim, a).unwrap());
        }
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
        let se = (var / vals.len() as f64).sqrt();
        println!("k={k:2} mean F'={mean:+.4} se={se:.4} |mean|/se={:.1}", mean.abs() / se);
    }

    // Optimizer runs from both starting points.
    for theta0 in [15.0, 1.0] {
        let mut finals = Vec::new();
        for run_idx in 0..20u64 {
            let config = OptimizerConfig {
                a,
                r: 2.5,
                lambda0: 10.0,
                p: 0.6,
                iterations: 100,
                theta0,
                k_min: 1,
            };
            let base = rng::derive_seed(9000 + run_idx, 0);
            let records = run(&config, |k, i| {
                let seed = rng::derive_seed(base, i);
                let trace = generate_poisson_trace(rate, t_f, seed)?;
                let params = QueueParams::new(k, s, t_f)?;
                let sim = simulate(&trace, &params)?;
                Ok((sim.loss_volume + a * k as f64, cost_derivative(&sim, a)?))
            })
            .unwrap();
            let last = records.last().unwrap();
            let final_theta = last.theta - last.d;
            finals.push(final_theta);
        }
        let mut sorted = finals.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let median = (sorted[9] + sorted[10]) / 2.0;
        let in_band = finals
            .iter()
            .filter(|&&th| {
                let k = ((th + 0.5).floor() as i64).max(1);
                (5..=8).contains(&k)
            })
            .count();
        println!(
            "theta0={theta0}: final theta median={median:.3} range=[{:.2}, {:.2}] k in 5..8: {in_band}/20",
            sorted[0], sorted[19]
        );
    }
}
