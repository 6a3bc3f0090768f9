//! Exact squared Euclidean distance transform by separable lower envelopes
//! of parabolas. All envelope arithmetic is integral, so results are exact
//! and independent of evaluation order.

/// Squared distance for pixels with no reachable seed.
pub const UNREACHABLE: u64 = u64::MAX;

/// Breakpoint `num / den` between two envelope parabolas, `den > 0`.
#[derive(Clone, Copy)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn le(self, other: Frac) -> bool {
        (self.num as i128) * (other.den as i128) <= (other.num as i128) * (self.den as i128)
    }

    fn lt_int(self, p: i64) -> bool {
        (self.num as i128) < (p as i128) * (self.den as i128)
    }
}

/// One-dimensional pass: `out[p] = min_q f[q] + (p - q)^2` over finite `f[q]`.
fn transform_1d(f: &[u64], out: &mut [u64], v: &mut Vec<i64>, z: &mut Vec<Frac>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if fq == UNREACHABLE {
            continue;
        }
        let q = q as i64;
        let fq = fq as i64;
        loop {
            let Some(&last) = v.last() else {
                v.push(q);
                z.push(Frac { num: -1, den: 0 });
                break;
            };
            let fv = f[last as usize] as i64;
            let s = Frac {
                num: (fq + q * q) - (fv + last * last),
                den: 2 * (q - last),
            };
            let k = v.len() - 1;
            if k > 0 && s.le(z[k]) {
                v.pop();
                z.pop();
                continue;
            }
            v.push(q);
            z.push(s);
            break;
        }
    }
    if v.is_empty() {
        out.fill(UNREACHABLE);
        return;
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        let p = p as i64;
        while k + 1 < v.len() && z[k + 1].lt_int(p) {
            k += 1;
        }
        let d = p - v[k];
        *o = (d * d) as u64 + f[v[k] as usize];
    }
}

/// Squared Euclidean distance from every pixel to the nearest `true` seed
/// of a `width x height` row-major mask.
pub fn edt_squared(seeds: &[bool], width: usize, height: usize) -> Vec<u64> {
    assert_eq!(seeds.len(), width * height, "seed mask size mismatch");
    let mut grid: Vec<u64> = seeds
        .iter()
        .map(|&s| if s { 0 } else { UNREACHABLE })
        .collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());

    let mut col = vec![0u64; height];
    let mut col_out = vec![0u64; height];
    for x in 0..width {
        for y in 0..height {
            col[y] = grid[y * width + x];
        }
        transform_1d(&col, &mut col_out, &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = col_out[y];
        }
    }
    let mut row_out = vec![0u64; width];
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        transform_1d(row, &mut row_out, &mut v, &mut z);
        row.copy_from_slice(&row_out);
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed() {
        let mut seeds = vec![false; 25];
        seeds[12] = true;
        let d = edt_squared(&seeds, 5, 5);
        assert_eq!(d[12], 0);
        assert_eq!(d[0], 8);
        assert_eq!(d[2], 4);
        assert_eq!(d[24], 8);
    }

    #[test]
    fn no_seeds() {
        let d = edt_squared(&[false; 6], 3, 2);
        assert!(d.iter().all(|&v| v == UNREACHABLE));
    }

    #[test]
    fn equal_parabolas_tie() {
        let seeds = [true, false, false, false, true];
        assert_eq!(edt_squared(&seeds, 5, 1), vec![0, 1, 4, 1, 0]);
    }
}
