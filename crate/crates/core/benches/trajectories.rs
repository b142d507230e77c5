// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Averaged trajectory runs under sequential and parallel execution.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fluxquant::basis::{BasisSpec, DofBasis};
use fluxquant::hamiltonian::{squid_gauge_family, GaugePair};
use fluxquant::netlist::FluxDrive;
use fluxquant::noise::NoiseSpec;
use fluxquant::noisesim::{SimulationSettings, Simulator};
use fluxquant::par::Execution;
use fluxquant::spectrum::NumericModel;

fn simulator() -> Simulator {
    let h = squid_gauge_family(1.0, 3.0, 10.0, 5.0, GaugePair::LEFT).unwrap();
    let basis = BasisSpec {
        dofs: vec![DofBasis::Periodic { charge_cutoff: 30 }],
    };
    let model = NumericModel::new(&h, &basis).unwrap();
    let drive = FluxDrive {
        static_value: 0.25,
        noise: Some(NoiseSpec::new(0.002, 0.05)),
        tones: Vec::new(),
    };
    Simulator::for_model(&model, &[drive], Some(6)).unwrap()
}

fn averaged_run(c: &mut Criterion) {
    let sim = simulator();
    let mut group = c.benchmark_group("averaged_run");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let mut settings = SimulationSettings::new(0.5, 2.5e-4, 100, 3);
        settings.fit_start = Some(0.0);
        settings.execution = execution;
        group.bench_with_input(BenchmarkId::new(name, settings.trajectories), &settings, |b, s| {
            b.iter(|| sim.run(s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, averaged_run);
criterion_main!(benches);
