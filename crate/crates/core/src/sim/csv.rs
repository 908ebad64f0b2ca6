//! CSV trajectory log and constraint dump.

use std::io::{self, Write};

use super::{TickRecord, FORMAT_VERSION};

/// Formats `v` rounded to 9 significant digits, shortest representation.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    // avoid "-0"
    format!("{}", rounded + 0.0)
}

fn status(s: crate::bt::TickStatus) -> &'static str {
    match s {
        crate::bt::TickStatus::Success => "success",
        crate::bt::TickStatus::Failure => "failure",
        crate::bt::TickStatus::Running => "running",
    }
}

/// One row per agent per tick, with the condition values as `h_<id>` columns.
pub fn write_trajectory(out: &mut impl Write, records: &[TickRecord]) -> io::Result<()> {
    let conditions: Vec<String> =
        records.first().and_then(|r| r.decisions.first()).map(|d| d.h.keys().cloned().collect()).unwrap_or_default();
    write!(
        out,
        "format_version,tick,time,agent_id,x,y,b,docked,charging,waypoint_index,status,active_action,\
         active_prefix,levels_total,ux,uy"
    )?;
    for c in &conditions {
        write!(out, ",h_{c}")?;
    }
    writeln!(out, ",min_pairwise_distance")?;
    for rec in records {
        let w = &rec.world;
        let min_d = num(w.min_pairwise_distance());
        for (i, (a, d)) in w.agents.iter().zip(&rec.decisions).enumerate() {
            write!(
                out,
                "{FORMAT_VERSION},{},{},{i},{},{},{},{},{},{},{},{},{},{},{},{}",
                w.tick,
                num(w.time()),
                num(a.x.x),
                num(a.x.y),
                num(a.b),
                u8::from(a.docked),
                u8::from(a.charging),
                a.waypoint_index,
                status(d.status),
                d.action.map_or("", |k| k.id()),
                d.active_prefix,
                d.levels_total,
                num(d.control.x),
                num(d.control.y),
            )?;
            for c in &conditions {
                write!(out, ",{}", d.h.get(c).map_or(String::new(), |v| num(*v)))?;
            }
            writeln!(out, ",{min_d}")?;
        }
    }
    Ok(())
}

/// Every half-plane considered, with whether its level survived relaxation.
/// `cbf_slack = a·u − b` at the applied control equals `ḣ + α(h)`.
pub fn write_constraints(out: &mut impl Write, records: &[TickRecord]) -> io::Result<()> {
    writeln!(out, "format_version,tick,agent_id,action,level,source,a_x,a_y,b,cbf_slack,active_prefix,kept")?;
    for rec in records {
        for (i, d) in rec.decisions.iter().enumerate() {
            let action = d.action.map_or("", |k| k.id());
            for (level, constraints) in d.levels.iter().enumerate() {
                for c in constraints {
                    writeln!(
                        out,
                        "{FORMAT_VERSION},{},{i},{action},{level},{},{},{},{},{},{},{}",
                        rec.world.tick,
                        c.source,
                        num(c.a.x),
                        num(c.a.y),
                        num(c.b),
                        num(c.a.dot(d.control) - c.b),
                        d.active_prefix,
                        u8::from(level < d.active_prefix),
                    )?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0), "0.333333333");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(123456789012.0), "123456789000");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(num(0.1 + 0.2), "0.3");
    }
}
