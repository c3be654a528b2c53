//! Synthetic piecewise-constant test images.

use crate::error::Result;
use crate::signal::Image2D;

/// Background with a rectangle, two discs and a bar on 8-bit levels.
pub fn shapes(height: usize, width: usize) -> Result<Image2D> {
    let sr = height as f64 / 64.0;
    let sc = width as f64 / 64.0;
    Image2D::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64 / sr, c as f64 / sc);
        let mut v = 50.0;
        if (8.0..40.0).contains(&y) && (12.0..52.0).contains(&x) {
            v = 130.0;
        }
        if (y - 44.0).hypot(x - 22.0) < 12.0 {
            v = 200.0;
        }
        if (y - 20.0).hypot(x - 44.0) < 6.0 {
            v = 90.0;
        }
        if (50.0..60.0).contains(&y) && (40.0..58.0).contains(&x) {
            v = 170.0;
        }
        v
    })
    .map(|im| im.with_maxval(255))
}

/// Pixels whose `(2m+1)²` neighbourhood (periodic) is constant, grouped by
/// value in increasing order.
pub fn flat_regions(im: &Image2D, margin: usize) -> Vec<(f64, Vec<usize>)> {
    let (h, w) = (im.height(), im.width());
    let m = margin as isize;
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = im.get(r, c);
            let flat = (-m..=m).all(|dr| {
                (-m..=m).all(|dc| {
                    let rr = (r as isize + dr).rem_euclid(h as isize) as usize;
                    let cc = (c as isize + dc).rem_euclid(w as isize) as usize;
                    im.get(rr, cc) == v
                })
            });
            if !flat {
                continue;
            }
            match groups.iter_mut().find(|(g, _)| *g == v) {
                Some((_, px)) => px.push(r * w + c),
                None => groups.push((v, vec![r * w + c])),
            }
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_of_the_phantom() {
        let im = shapes(64, 64).unwrap();
        let regions = flat_regions(&im, 4);
        let levels: Vec<f64> = regions.iter().map(|r| r.0).collect();
        assert_eq!(levels, vec![50.0, 90.0, 130.0, 170.0, 200.0]);
        assert!(regions
            .iter()
            .all(|(v, px)| px.iter().all(|&k| im.pixels()[k] == *v)));
    }
}
