use super::EnvState;

const COLS: usize = 40;
const ROWS: usize = 12;

/// Fixed-size character grid, origin bottom-left. Glyphs: `A` agent, `K` key,
/// `D` door, `E` enemy (`S` when static), `F` fish, `C` chest (`c` once
/// opened), `.` empty. Later entities overwrite earlier ones in a shared cell.
pub fn render_ascii(state: &EnvState) -> String {
    let mut grid = vec![vec!['.'; COLS]; ROWS];
    let w = state.width.max(1e-9);
    let h = state.height.max(1e-9);
    // The agent goes last so it is never hidden.
    let mut order: Vec<_> = state.entities.iter().collect();
    order.sort_by_key(|e| e.class == super::EntityClass::Agent);
    for e in order {
        let col = ((e.x / w) * (COLS - 1) as f64).round().clamp(0.0, (COLS - 1) as f64) as usize;
        let row = ((e.y / h) * (ROWS - 1) as f64).round().clamp(0.0, (ROWS - 1) as f64) as usize;
        let mut g = e.class.glyph();
        if e.static_ {
            g = 'S';
        }
        if e.opened {
            g = g.to_ascii_lowercase();
        }
        grid[ROWS - 1 - row][col] = g;
    }
    let mut out = String::with_capacity((COLS + 1) * ROWS + 32);
    for line in grid {
        out.extend(line);
        out.push('\n');
    }
    out.push_str(&format!("tick {}{}\n", state.tick, if state.terminal { " (terminal)" } else { "" }));
    out
}
