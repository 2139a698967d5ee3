use super::{neighbors4, SuperpixelMap};

/// Makes every superpixel 4-connected.
///
/// Raw labels are split into 4-connected components. Components smaller
/// than `(W·H/expected)/4` pixels are merged into their largest adjacent
/// region; the rest become superpixels of their own. Output labels are
/// compacted in order of first raster occurrence. `u32::MAX` marks an
/// unassigned pixel, which always merges.
pub fn enforce_connectivity(
    labels: &[u32],
    width: u32,
    height: u32,
    expected: usize,
) -> SuperpixelMap {
    let (w, h) = (width as usize, height as usize);
    assert_eq!(labels.len(), w * h, "label buffer does not match dimensions");
    let min_size = (w * h) as f64 / expected.max(1) as f64 / 4.0;

    // 4-connected components of the raw labels, in raster order.
    let mut comp = vec![usize::MAX; w * h];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let l = labels[start];
        let mut pix = vec![start];
        comp[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for q in neighbors4(p % w, p / w, w, h) {
                if comp[q] == usize::MAX && labels[q] == l {
                    comp[q] = id;
                    pix.push(q);
                    stack.push(q);
                }
            }
        }
        members.push(pix);
    }

    let n = members.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = members.iter().map(Vec::len).collect();
    fn find(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }

    for c in 0..n {
        let root = find(&mut parent, c);
        let unassigned = labels[members[c][0]] == u32::MAX;
        if !unassigned && size[root] as f64 >= min_size {
            continue;
        }
        let mut best: Option<usize> = None;
        for &p in &members[c] {
            for q in neighbors4(p % w, p / w, w, h) {
                let r = find(&mut parent, comp[q]);
                if r == root {
                    continue;
                }
                best = match best {
                    Some(b) if size[b] > size[r] || (size[b] == size[r] && b < r) => Some(b),
                    _ => Some(r),
                };
            }
        }
        if let Some(target) = best {
            parent[root] = target;
            size[target] += size[root];
        }
    }

    let mut remap = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut out = vec![0u32; w * h];
    for p in 0..w * h {
        let r = find(&mut parent, comp[p]);
        if remap[r] == u32::MAX {
            remap[r] = next;
            next += 1;
        }
        out[p] = remap[r];
    }
    SuperpixelMap {
        width,
        height,
        labels: out,
        node_count: next as usize,
    }
}
