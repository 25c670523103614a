//! Turn a parsed [`ScenarioConfig`] into runtime systems and hold the
//! built-in two-cavity reference scenario.

use nalgebra::DMatrix;

use qlin_core::covariance::{is_hurwitz, uniform_grid};
use qlin_core::interconnect::{
    compose_closed_loop, ClosedLoop, ControllerSpec, Measurement, PlantWiring, Quadrature,
    WiringSpec,
};
use qlin_core::model::{to_quadrature, ItoFieldSpec, OscillatorSpec, QuadratureSystem};

use crate::config::{
    complex_matrix, err, real_matrix, BuildError, ControllerConfig, FieldConfig, InitialConfig,
    MeasureConfig, PlantConfig, ScenarioConfig, TimeGridConfig, WiringConfig,
};

/// Default number of grid steps for scenario runs.
pub const DEFAULT_STEPS: usize = 2000;

/// Thresholds the CLI applies when judging scenario results.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub verdict: f64,
    pub heisenberg: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            verdict: qlin_core::entanglement::VERDICT_TOL,
            heisenberg: qlin_core::entanglement::VALIDITY_TOL,
        }
    }
}

/// A fully resolved scenario: the composed closed loop plus optional initial
/// state and judgment thresholds.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub closed_loop: ClosedLoop,
    pub initial: Option<DMatrix<f64>>,
    pub tolerances: Tolerances,
}

fn build_plant(cfg: &PlantConfig, path: &str) -> Result<QuadratureSystem, BuildError> {
    let r = real_matrix(&cfg.r, &format!("{path}.r"))?;
    let k = complex_matrix(&cfg.k, &format!("{path}.k"))?;
    let s = complex_matrix(&cfg.s, &format!("{path}.s"))?;
    let spec = OscillatorSpec::new(r, k, s).map_err(|e| err(path, e))?;
    let field = match &cfg.field {
        FieldConfig::Named(name) if name == "vacuum" => {
            qlin_core::model::vacuum_field(spec.fields().max(1))
                .map_err(|e| err(&format!("{path}.field"), e))?
        }
        FieldConfig::Named(other) => {
            return Err(err(
                &format!("{path}.field"),
                format!("unknown field preset `{other}` (expected \"vacuum\" or an s_w table)"),
            ));
        }
        FieldConfig::Custom { s_w } => {
            let m = real_matrix(s_w, &format!("{path}.field.s_w"))?;
            ItoFieldSpec::new(m).map_err(|e| err(&format!("{path}.field.s_w"), e))?
        }
    };
    to_quadrature(&spec, &field).map_err(|e| err(path, e))
}

fn build_measurements(cfgs: &[MeasureConfig], path: &str) -> Result<Vec<Measurement>, BuildError> {
    cfgs.iter()
        .enumerate()
        .map(|(i, m)| {
            let quadrature = match m.quadrature.as_str() {
                "q" | "amplitude" => Quadrature::Amplitude,
                "p" | "phase" => Quadrature::Phase,
                other => {
                    return Err(err(
                        &format!("{path}[{i}].quadrature"),
                        format!("expected \"q\" or \"p\", got `{other}`"),
                    ))
                }
            };
            Ok(Measurement {
                field: m.field,
                quadrature,
            })
        })
        .collect()
}

fn build_wiring(cfg: &WiringConfig) -> Result<WiringSpec, BuildError> {
    let ham =
        |rows: &Option<Vec<Vec<f64>>>, path: &str| -> Result<Option<DMatrix<f64>>, BuildError> {
            rows.as_ref().map(|r| real_matrix(r, path)).transpose()
        };
    WiringSpec::new([
        PlantWiring {
            measured: build_measurements(&cfg.measure_one, "wiring.measure_one")?,
            modulated: cfg.modulate_one.clone(),
            ham_mod: ham(&cfg.ham_one, "wiring.ham_one")?,
        },
        PlantWiring {
            measured: build_measurements(&cfg.measure_two, "wiring.measure_two")?,
            modulated: cfg.modulate_two.clone(),
            ham_mod: ham(&cfg.ham_two, "wiring.ham_two")?,
        },
    ])
    .map_err(|e| err("wiring", e))
}

fn build_controller(cfg: &ControllerConfig) -> Result<ControllerSpec, BuildError> {
    let a = real_matrix(&cfg.a_c, "controller.a_c")?;
    let nc = a.nrows();
    let b = if cfg.b_c.is_empty() {
        DMatrix::zeros(nc, 0)
    } else {
        real_matrix(&cfg.b_c, "controller.b_c")?
    };
    let output_map = |rows: &[Vec<f64>], path: &str| -> Result<DMatrix<f64>, BuildError> {
        if rows.is_empty() {
            Ok(DMatrix::zeros(0, nc))
        } else {
            real_matrix(rows, path)
        }
    };
    ControllerSpec::new(
        a,
        b,
        [
            output_map(&cfg.c_ham_one, "controller.c_ham_one")?,
            output_map(&cfg.c_ham_two, "controller.c_ham_two")?,
        ],
        [
            output_map(&cfg.c_mod_one, "controller.c_mod_one")?,
            output_map(&cfg.c_mod_two, "controller.c_mod_two")?,
        ],
    )
    .map_err(|e| err("controller", e))
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self, BuildError> {
        let plant1 = build_plant(&config.plants.one, "plants.one")?;
        let plant2 = build_plant(&config.plants.two, "plants.two")?;
        let wiring = build_wiring(&config.wiring)?;
        let controller = build_controller(&config.controller)?;
        let closed_loop = compose_closed_loop(&plant1, &plant2, &controller, &wiring)
            .map_err(|e| err("wiring", e))?;

        let initial = config
            .initial
            .as_ref()
            .map(|init| build_initial(init, closed_loop.partition().classical))
            .transpose()?;

        let tolerances = {
            let overrides = config.tolerances.unwrap_or_default();
            let defaults = Tolerances::default();
            Tolerances {
                verdict: overrides.verdict.unwrap_or(defaults.verdict),
                heisenberg: overrides.heisenberg.unwrap_or(defaults.heisenberg),
            }
        };

        Ok(Self {
            config,
            closed_loop,
            initial,
            tolerances,
        })
    }

    /// Resolved time grid: the configured one, or 2000 uniform steps over
    /// `[0, 10 / |spectral abscissa|]` when the loop is Hurwitz.
    pub fn time_grid(&self) -> Result<Vec<f64>, BuildError> {
        match self.config.time_grid {
            Some(TimeGridConfig { t_end, steps }) => {
                if !t_end.is_finite() || t_end < 0.0 {
                    return Err(err("time_grid.t_end", "must be finite and nonnegative"));
                }
                Ok(uniform_grid(t_end, steps))
            }
            None => {
                let (hurwitz, abscissa) = is_hurwitz(self.closed_loop.a_tilde());
                if !hurwitz {
                    return Err(err(
                        "time_grid",
                        format!(
                            "no grid configured and the loop is not Hurwitz \
                             (abscissa {abscissa}), so no default horizon exists"
                        ),
                    ));
                }
                Ok(uniform_grid(10.0 / abscissa.abs(), DEFAULT_STEPS))
            }
        }
    }
}

fn build_initial(init: &InitialConfig, nc: usize) -> Result<DMatrix<f64>, BuildError> {
    let p11 = real_matrix(&init.p11, "initial.p11")?;
    if p11.nrows() != 4 || p11.ncols() != 4 {
        return Err(err(
            "initial.p11",
            format!("must be 4x4, got {}x{}", p11.nrows(), p11.ncols()),
        ));
    }
    let mut p0 = DMatrix::zeros(4 + nc, 4 + nc);
    p0.view_mut((0, 0), (4, 4)).copy_from(&p11);
    if let Some(classical) = &init.classical {
        let z = real_matrix(classical, "initial.classical")?;
        if z.nrows() != nc || z.ncols() != nc {
            return Err(err(
                "initial.classical",
                format!("must be {nc}x{nc}, got {}x{}", z.nrows(), z.ncols()),
            ));
        }
        p0.view_mut((4, 4), (nc, nc)).copy_from(&z);
    }
    Ok(p0)
}

/// The built-in reference scenario: two identical damped cavities, the first
/// one's input field displaced by the controller output, the second one's
/// amplitude quadrature measured by homodyne detection and fed to a
/// first-order controller. The state ordering puts the displaced cavity
/// first, so the composed matrices match the usual presentation of this loop.
pub fn example_config() -> ScenarioConfig {
    let cavity = PlantConfig {
        r: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        k: vec![vec![[0.05, 0.0], [0.0, 0.05]]],
        s: vec![vec![[1.0, 0.0]]],
        field: FieldConfig::Named("vacuum".into()),
    };
    ScenarioConfig {
        output: None,
        plants: crate::config::PlantsConfig {
            one: cavity.clone(),
            two: cavity,
        },
        controller: ControllerConfig {
            a_c: vec![vec![-1.0]],
            b_c: vec![vec![1.0]],
            c_ham_one: vec![],
            c_ham_two: vec![],
            c_mod_one: vec![vec![1.0], vec![1.0]],
            c_mod_two: vec![],
        },
        wiring: WiringConfig {
            measure_one: vec![],
            measure_two: vec![MeasureConfig {
                field: 0,
                quadrature: "q".into(),
            }],
            modulate_one: vec![0],
            modulate_two: vec![],
            ham_one: None,
            ham_two: None,
        },
        initial: None,
        time_grid: Some(TimeGridConfig {
            t_end: 2000.0,
            steps: 2000,
        }),
        tolerances: None,
    }
}

/// Initially entangled two-mode covariance of the reference scenario.
pub fn example_initial_entangled() -> Vec<Vec<f64>> {
    vec![
        vec![0.5028, 0.0, -0.0528, 0.0],
        vec![0.0, 0.5028, 0.0, 0.0528],
        vec![-0.0528, 0.0, 0.5028, 0.0],
        vec![0.0, 0.0528, 0.0, 0.5028],
    ]
}

/// Initially separable two-mode covariance of the reference scenario.
pub fn example_initial_separable() -> Vec<Vec<f64>> {
    vec![
        vec![0.5704, 0.0, 0.0034, 0.0562],
        vec![0.0, 0.5704, 0.0, 0.0528],
        vec![0.0034, 0.0, 0.6203, 0.0499],
        vec![0.0562, 0.0528, 0.0499, 0.6203],
    ]
}

/// Reference scenario with one of the built-in initial covariances attached.
pub fn example_scenario(entangled: bool) -> Result<Scenario, BuildError> {
    let mut config = example_config();
    config.initial = Some(InitialConfig {
        p11: if entangled {
            example_initial_entangled()
        } else {
            example_initial_separable()
        },
        classical: None,
    });
    Scenario::from_config(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped(name: &str) -> ScenarioConfig {
        let path = format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
        toml::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| {
            panic!("cannot read {path}: {e}");
        }))
        .unwrap()
    }

    #[test]
    fn example_config_round_trips_through_toml() {
        let mut config = example_config();
        config.initial = Some(InitialConfig {
            p11: example_initial_entangled(),
            classical: None,
        });
        let text = toml::to_string(&config).unwrap();
        let parsed: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(parsed, config);

        // And the rebuilt scenario produces identical matrices.
        let a = Scenario::from_config(config).unwrap();
        let b = Scenario::from_config(parsed).unwrap();
        assert_eq!(a.closed_loop.a_tilde(), b.closed_loop.a_tilde());
        assert_eq!(a.closed_loop.b_tilde(), b.closed_loop.b_tilde());
        assert_eq!(a.initial, b.initial);
    }

    #[test]
    fn shipped_scenarios_match_the_builtin_loop() {
        for (file, p11) in [
            ("two_cavity_entangled.toml", example_initial_entangled()),
            ("two_cavity_separable.toml", example_initial_separable()),
        ] {
            let mut parsed = shipped(file);
            assert!(
                parsed.output.is_some(),
                "{file} should set an output prefix"
            );
            parsed.output = None;
            let mut expected = example_config();
            expected.initial = Some(InitialConfig {
                p11,
                classical: None,
            });
            assert_eq!(
                parsed, expected,
                "{file} drifted from the built-in scenario"
            );
        }
    }

    #[test]
    fn zero_controller_scenario_builds_block_diagonal_loop() {
        let scenario = Scenario::from_config(shipped("zero_controller.toml")).unwrap();
        let report = qlin_core::interconnect::validate_block_structure(&scenario.closed_loop);
        assert!(report.pass);
        // Controller rows carry no noise and no drift coupling.
        let a = scenario.closed_loop.a_tilde();
        assert_eq!(
            a.view((0, 4), (4, 1)).iter().filter(|v| **v != 0.0).count(),
            0
        );
        assert_eq!(
            a.view((4, 0), (1, 4)).iter().filter(|v| **v != 0.0).count(),
            0
        );
    }

    #[test]
    fn default_grid_spans_ten_decay_times() {
        let mut config = example_config();
        config.time_grid = None;
        let scenario = Scenario::from_config(config).unwrap();
        let grid = scenario.time_grid().unwrap();
        assert_eq!(grid.len(), DEFAULT_STEPS + 1);
        let t_end = grid.last().unwrap();
        assert!((t_end - 2000.0).abs() <= 1e-6 * 2000.0, "t_end = {t_end}");
    }

    #[test]
    fn unknown_field_preset_is_reported_with_its_path() {
        let mut config = example_config();
        config.plants.one.field = FieldConfig::Named("squeezed".into());
        let error = Scenario::from_config(config).unwrap_err();
        assert!(error.field.contains("plants.one.field"), "{error}");
    }

    #[test]
    fn ragged_matrix_is_reported_with_its_path() {
        let mut config = example_config();
        config.controller.a_c = vec![vec![1.0, 2.0], vec![3.0]];
        let error = Scenario::from_config(config).unwrap_err();
        assert!(error.field.contains("controller.a_c"), "{error}");
    }
}
