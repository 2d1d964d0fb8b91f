//! Simulated SNMP agents for reproducing farms and fault scenarios on one
//! machine.

mod agent;
mod farm;

use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use agent::{answer, Agent, AgentStats, Fault};
pub use farm::{spawn_farm, table1_template, Farm, FragmentOptions};

use crate::rrd::VarKind;
use crate::snmp::{Oid, Value};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("cannot bind UDP port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("drop probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("counter width must be 32 or 64, got {0}")]
    BadWidth(u32),
    #[error("a farm needs at least one agent")]
    EmptyFarm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    Constant(f64),
    /// Starts at 0 and grows by `rate` per second.
    Ramp(f64),
    Sine {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    /// `floor(offset + rate*t) mod 2^width`, with a seeded integer offset.
    Counter {
        rate: f64,
        width: u32,
    },
}

/// Wire syntax for non-counter generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syntax {
    Integer,
    Gauge32,
    TimeTicks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimVar {
    /// Identifier used for the variable in generated configurations.
    pub id: String,
    pub oid: Oid,
    pub generator: Generator,
    pub syntax: Syntax,
}

impl SimVar {
    pub fn new(id: impl Into<String>, oid: Oid, generator: Generator) -> SimVar {
        SimVar {
            id: id.into(),
            oid,
            generator,
            syntax: Syntax::Gauge32,
        }
    }

    pub fn with_syntax(mut self, syntax: Syntax) -> SimVar {
        self.syntax = syntax;
        self
    }

    /// How a collector should interpret this variable.
    pub fn kind(&self) -> VarKind {
        match self.generator {
            Generator::Counter { .. } => VarKind::Counter,
            _ => VarKind::Gauge,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Faults {
    pub drop_probability: f64,
    pub silent: bool,
    /// Answered as if the agent did not implement them.
    pub error_oids: HashSet<Oid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentScript {
    /// 0 picks an ephemeral port.
    pub port: u16,
    pub community: String,
    pub variables: Vec<SimVar>,
    pub faults: Faults,
    /// Use epoch seconds instead of seconds since the agent started.
    pub wall_clock: bool,
}

impl AgentScript {
    pub fn new(community: impl Into<String>, variables: Vec<SimVar>) -> AgentScript {
        AgentScript {
            port: 0,
            community: community.into(),
            variables,
            faults: Faults::default(),
            wall_clock: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let p = self.faults.drop_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::BadProbability(p));
        }
        for v in &self.variables {
            if let Generator::Counter { width, .. } = v.generator {
                if width != 32 && width != 64 {
                    return Err(SimError::BadWidth(width));
                }
            }
        }
        Ok(())
    }
}

/// Per-variable parameters drawn from the agent seed.
#[derive(Debug, Clone)]
pub struct Evaluator {
    vars: Vec<(SimVar, f64)>,
}

impl Evaluator {
    pub fn new(vars: &[SimVar], seed: u64) -> Evaluator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = vars
            .iter()
            .map(|v| {
                let p = match v.generator {
                    // 64-bit offsets stay below 2^52 so f64 arithmetic is exact
                    Generator::Counter { width: 64, .. } => (rng.gen::<u64>() >> 12) as f64,
                    Generator::Counter { .. } => rng.gen_range(0..1u64 << 32) as f64,
                    Generator::Sine { .. } => rng.gen_range(0.0..TAU),
                    _ => 0.0,
                };
                (v.clone(), p)
            })
            .collect();
        Evaluator { vars }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn position(&self, oid: &Oid) -> Option<usize> {
        self.vars.iter().position(|(v, _)| v.oid == *oid)
    }

    /// Value of variable `i` at `t` seconds.
    pub fn value(&self, i: usize, t: f64) -> Value {
        let (v, param) = &self.vars[i];
        let x = match v.generator {
            Generator::Constant(c) => c,
            Generator::Ramp(rate) => rate * t,
            Generator::Sine {
                mean,
                amplitude,
                period,
            } => mean + amplitude * (TAU * t / period + param).sin(),
            Generator::Counter { rate, width } => {
                let raw = (param + rate * t).floor();
                return if width == 64 {
                    Value::Counter64(raw as u64)
                } else {
                    Value::Counter32((raw.rem_euclid(4_294_967_296.0)) as u32)
                };
            }
        };
        let x = x.round();
        match v.syntax {
            Syntax::Integer => Value::Integer(x.clamp(i32::MIN as f64, i32::MAX as f64) as i32),
            Syntax::Gauge32 => Value::Gauge32(x.clamp(0.0, u32::MAX as f64) as u32),
            Syntax::TimeTicks => Value::TimeTicks(x.clamp(0.0, u32::MAX as f64) as u32),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snmp::parse_oid;

    fn var(g: Generator) -> SimVar {
        SimVar::new("v", parse_oid(".1.3.6.1.4.1.1.1").unwrap(), g)
    }

    #[test]
    fn counter_difference_over_thirty_seconds() {
        let e = Evaluator::new(
            &[var(Generator::Counter {
                rate: 100.0,
                width: 32,
            })],
            7,
        );
        let (Value::Counter32(a), Value::Counter32(b)) = (e.value(0, 12.0), e.value(0, 42.0))
        else {
            panic!("counter type");
        };
        assert_eq!(b.wrapping_sub(a), 3000);
    }

    #[test]
    fn constant_and_determinism() {
        let vars = [
            var(Generator::Constant(42.0)),
            var(Generator::Sine {
                mean: 50.0,
                amplitude: 10.0,
                period: 60.0,
            }),
        ];
        let e1 = Evaluator::new(&vars, 3);
        let e2 = Evaluator::new(&vars, 3);
        assert_eq!(e1.value(0, 1.0), Value::Gauge32(42));
        assert_eq!(e1.value(0, 99.0), Value::Gauge32(42));
        for t in [0.0, 1.5, 17.0] {
            assert_eq!(e1.value(1, t), e2.value(1, t));
        }
    }

    #[test]
    fn validation() {
        let mut s = AgentScript::new(
            "public",
            vec![var(Generator::Counter {
                rate: 1.0,
                width: 16,
            })],
        );
        assert!(matches!(s.validate(), Err(SimError::BadWidth(16))));
        s.variables.clear();
        s.faults.drop_probability = 1.5;
        assert!(matches!(s.validate(), Err(SimError::BadProbability(_))));
    }
}
