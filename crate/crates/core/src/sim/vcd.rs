// SPDX-License-Identifier: Apache-2.0

use std::io;

use vcd::{IdCode, TimescaleUnit, Value, Writer};

use super::Trace;

/// Ticks per simulated cycle; the clock falls halfway through.
const CYCLE_TICKS: u64 = 10;

/// Writes the trace as a VCD waveform under a scope named `module`.
pub fn write_vcd(trace: &Trace, module: &str, out: impl io::Write) -> io::Result<()> {
    let mut w = Writer::new(out);
    w.timescale(1, TimescaleUnit::NS)?;
    w.add_module(module)?;
    let layout = &trace.layout;
    let ids: Vec<IdCode> = layout
        .names
        .iter()
        .zip(&layout.widths)
        .map(|(n, &width)| w.add_wire(width, n))
        .collect::<io::Result<_>>()?;
    w.upscope()?;
    w.enddefinitions()?;
    let clock = layout.clock.as_deref().and_then(|c| layout.slot(c));
    let mut last: Vec<Option<u64>> = vec![None; ids.len()];
    for c in 0..trace.cycles() {
        w.timestamp(c as u64 * CYCLE_TICKS)?;
        for (i, id) in ids.iter().enumerate() {
            let v = trace.at(c, i as u32);
            if last[i] == Some(v) && Some(i as u32) != clock {
                continue;
            }
            last[i] = Some(v);
            emit(&mut w, *id, v, layout.widths[i])?;
        }
        if let Some(clk) = clock {
            w.timestamp(c as u64 * CYCLE_TICKS + CYCLE_TICKS / 2)?;
            w.change_scalar(ids[clk as usize], Value::V0)?;
        }
    }
    w.timestamp(trace.cycles() as u64 * CYCLE_TICKS)?;
    w.flush()
}

fn emit<W: io::Write>(w: &mut Writer<W>, id: IdCode, v: u64, width: u32) -> io::Result<()> {
    if width == 1 {
        return w.change_scalar(id, if v & 1 == 1 { Value::V1 } else { Value::V0 });
    }
    let bits = (0..width)
        .rev()
        .map(|b| if (v >> b) & 1 == 1 { Value::V1 } else { Value::V0 });
    w.change_vector(id, bits)
}
