use crate::config::MibSpec;
use crate::rrd::VarKind;

/// Rate-computation state for one variable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VarState {
    /// Last raw sample and its time, always set together.
    pub last: Option<(u64, f64)>,
    pub last_processed: Option<f64>,
}

const TWO_32: f64 = 4_294_967_296.0;
const TWO_64: f64 = 18_446_744_073_709_551_616.0;

/// Increase from `prev` to `raw`, assuming a counter that may have wrapped
/// once: at 2^32 when `prev` fits in 32 bits, else at 2^64.
pub fn counter_delta(prev: u64, raw: u64) -> f64 {
    if raw >= prev {
        (raw - prev) as f64
    } else if prev <= u32::MAX as u64 {
        (TWO_32 - prev as f64) + raw as f64
    } else {
        // 2^64 - prev + raw, exact in u64 as (raw - prev) mod 2^64
        let d = raw.wrapping_sub(prev);
        if d == 0 {
            TWO_64
        } else {
            d as f64
        }
    }
}

/// Converts a raw sample into the stored value and advances `state`.
/// Returns `None` for a first COUNTER/DERIVE sample, a non-advancing
/// clock, or a value outside the configured bounds.
pub fn process_value(spec: &MibSpec, raw: u64, state: &mut VarState, now: f64) -> Option<f64> {
    let prev = state.last.replace((raw, now));
    let value = match spec.kind {
        VarKind::Gauge => Some(raw as f64),
        VarKind::Counter | VarKind::Derive => match prev {
            Some((last_raw, last_time)) if now > last_time => {
                let dt = now - last_time;
                Some(match spec.kind {
                    VarKind::Counter => counter_delta(last_raw, raw) / dt,
                    _ => (raw as f64 - last_raw as f64) / dt,
                })
            }
            _ => None,
        },
    };
    let value = value.filter(|v| {
        v.is_finite() && spec.min.is_none_or(|lo| *v >= lo) && spec.max.is_none_or(|hi| *v <= hi)
    });
    state.last_processed = value;
    value
}
