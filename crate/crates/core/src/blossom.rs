//! Maximum-weight matching in general graphs (primal-dual blossom method).
//!
//! Port of the classic O(V^3) algorithm of Galil's survey in the van
//! Rantwijk formulation: grow alternating trees from free vertices, shrink
//! odd cycles into blossoms, and pump slack out of the dual variables until
//! an augmenting path appears. With `max_cardinality` the result is a
//! maximum-cardinality matching of maximum weight, which is what the
//! minimum-weight perfect matching reduction needs (it negates weights
//! against a large constant).
//!
//! Vertex dual variables are stored pre-multiplied by two, so all arithmetic
//! stays in `i64` for integer edge weights.

const NONE: usize = usize::MAX;

const FREE: u8 = 0;
const LABEL_S: u8 = 1;
const LABEL_T: u8 = 2;
const BREADCRUMB: u8 = 5;

struct Solver<'a> {
    nvertex: usize,
    nedge: usize,
    edges: &'a [(usize, usize, i64)],
    maxcardinality: bool,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Vec<usize>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Solver<'a> {
    fn new(nvertex: usize, edges: &'a [(usize, usize, i64)], maxcardinality: bool) -> Solver<'a> {
        let nedge = edges.len();
        let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        // Vertex duals start at the maximum edge weight (the 2u convention).
        let mut endpoint = Vec::with_capacity(2 * nedge);
        for &(i, j, _) in edges {
            debug_assert!(i != j && i < nvertex && j < nvertex);
            endpoint.push(i);
            endpoint.push(j);
        }
        let mut neighbend = vec![Vec::new(); nvertex];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut dualvar = vec![maxweight; nvertex];
        dualvar.extend(std::iter::repeat_n(0, nvertex));
        let mut blossombase: Vec<usize> = (0..nvertex).collect();
        blossombase.extend(std::iter::repeat_n(NONE, nvertex));
        Solver {
            nvertex,
            nedge,
            edges,
            maxcardinality,
            endpoint,
            neighbend,
            mate: vec![NONE; nvertex],
            label: vec![FREE; 2 * nvertex],
            labelend: vec![NONE; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![NONE; 2 * nvertex],
            blossomchilds: vec![Vec::new(); 2 * nvertex],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * nvertex],
            bestedge: vec![NONE; 2 * nvertex],
            blossombestedges: vec![Vec::new(); 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).collect(),
            dualvar,
            allowedge: vec![false; nedge],
            queue: Vec::new(),
        }
    }

    /// 2 * slack of edge k (only valid outside blossoms).
    #[inline]
    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn blossom_leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nvertex {
                out.push(t);
            } else {
                stack.extend(self.blossomchilds[t].iter().copied());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == FREE && self.label[b] == FREE);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == LABEL_S {
            let leaves = self.blossom_leaves(b);
            self.queue.extend(leaves);
        } else {
            let base = self.blossombase[b];
            debug_assert!(self.mate[base] != NONE);
            let mbase = self.mate[base];
            let ep = self.endpoint[mbase];
            self.assign_label(ep, LABEL_S, mbase ^ 1);
        }
    }

    /// Trace back from v and w; return the base of a new blossom or NONE for
    /// an augmenting path.
    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        let mut v = v;
        let mut w = w;
        while v != NONE {
            let b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], LABEL_S);
            path.push(b);
            self.label[b] = BREADCRUMB;
            debug_assert_eq!(self.labelend[b], self.mate[self.blossombase[b]]);
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                let bt = self.inblossom[v];
                debug_assert_eq!(self.label[bt], LABEL_T);
                debug_assert!(self.labelend[bt] != NONE);
                v = self.endpoint[self.labelend[bt]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = LABEL_S;
        }
        base
    }

    /// Shrink the cycle through edge k with the given base into a blossom.
    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom pool exhausted");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut childs: Vec<usize> = Vec::new();
        let mut endps: Vec<usize> = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            childs.push(bv);
            endps.push(self.labelend[bv]);
            debug_assert!(
                self.label[bv] == LABEL_T
                    || (self.label[bv] == LABEL_S
                        && self.labelend[bv] == self.mate[self.blossombase[bv]])
            );
            debug_assert!(self.labelend[bv] != NONE);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        childs.push(bb);
        childs.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            childs.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            debug_assert!(
                self.label[bw] == LABEL_T
                    || (self.label[bw] == LABEL_S
                        && self.labelend[bw] == self.mate[self.blossombase[bw]])
            );
            debug_assert!(self.labelend[bw] != NONE);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        self.blossomchilds[b] = childs;
        self.blossomendps[b] = endps;
        debug_assert_eq!(self.label[bb], LABEL_S);
        self.label[b] = LABEL_S;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        for v in self.blossom_leaves(b) {
            if self.label[self.inblossom[v]] == LABEL_T {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        // Least-slack edges to neighbouring S-blossoms.
        let mut bestedgeto = vec![NONE; 2 * self.nvertex];
        let childs = self.blossomchilds[b].clone();
        for bv in childs {
            let nblists: Vec<Vec<usize>> = if self.blossombestedges[bv].is_empty() {
                self.blossom_leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect()
            } else {
                vec![self.blossombestedges[bv].clone()]
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == LABEL_S
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.blossombestedges[bv] = Vec::new();
            self.bestedge[bv] = NONE;
        }
        self.blossombestedges[b] = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for idx in 0..self.blossombestedges[b].len() {
            let k = self.blossombestedges[b][idx];
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = NONE;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.blossom_leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == LABEL_T {
            debug_assert!(self.labelend[b] != NONE);
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let len = self.blossomchilds[b].len() as i64;
            let mut j = self.blossomchilds[b]
                .iter()
                .position(|&r| r == entrychild)
                .unwrap() as i64;
            let (jstep, endptrick): (i64, usize) = if j & 1 != 0 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = FREE;
                let idx = self.wrap_endp(b, j - endptrick as i64);
                self.label[self.endpoint[idx ^ endptrick ^ 1]] = FREE;
                let ep = self.endpoint[p ^ 1];
                self.assign_label(ep, LABEL_T, p);
                let allow1 = self.wrap_endp(b, j - endptrick as i64) / 2;
                self.allowedge[allow1] = true;
                j += jstep;
                p = self.wrap_endp(b, j - endptrick as i64) ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = self.wrap_child(b, j);
            self.label[self.endpoint[p ^ 1]] = LABEL_T;
            self.label[bv] = LABEL_T;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while self.wrap_child(b, j) != entrychild {
                let bv = self.wrap_child(b, j);
                if self.label[bv] == LABEL_S {
                    j += jstep;
                    continue;
                }
                let mut v = NONE;
                for leaf in self.blossom_leaves(bv) {
                    v = leaf;
                    if self.label[leaf] != FREE {
                        break;
                    }
                }
                if v != NONE && self.label[v] != FREE {
                    debug_assert_eq!(self.label[v], LABEL_T);
                    debug_assert_eq!(self.inblossom[v], bv);
                    self.label[v] = FREE;
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = FREE;
                    let lblend = self.labelend[v];
                    self.assign_label(v, LABEL_T, lblend);
                }
                j += jstep;
            }
        }
        self.label[b] = FREE;
        self.labelend[b] = NONE;
        self.blossombase[b] = NONE;
        self.bestedge[b] = NONE;
        self.blossomchilds[b] = Vec::new();
        self.blossomendps[b] = Vec::new();
        self.blossombestedges[b] = Vec::new();
        self.unusedblossoms.push(b);
    }

    #[inline]
    fn wrap_child(&self, b: usize, j: i64) -> usize {
        let len = self.blossomchilds[b].len() as i64;
        let idx = if j >= 0 { j } else { len + j };
        self.blossomchilds[b][idx as usize]
    }

    #[inline]
    fn wrap_endp(&self, b: usize, j: i64) -> usize {
        let len = self.blossomendps[b].len() as i64;
        let idx = if j >= 0 { j } else { len + j };
        self.blossomendps[b][idx as usize]
    }

    /// Swap matched/unmatched edges along the path from v to the base of b.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }
        let i = self.blossomchilds[b].iter().position(|&r| r == t).unwrap();
        let len = self.blossomchilds[b].len() as i64;
        let mut j = i as i64;
        let (jstep, endptrick): (i64, usize) = if i & 1 != 0 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t1 = self.wrap_child(b, j);
            let p = self.wrap_endp(b, j - endptrick as i64) ^ endptrick;
            if t1 >= self.nvertex {
                let ep = self.endpoint[p];
                self.augment_blossom(t1, ep);
            }
            j += jstep;
            let t2 = self.wrap_child(b, j);
            if t2 >= self.nvertex {
                let ep = self.endpoint[p ^ 1];
                self.augment_blossom(t2, ep);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    /// Augment along the path through edge k joining two S-trees.
    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], LABEL_S);
                debug_assert_eq!(self.labelend[bs], self.mate[self.blossombase[bs]]);
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], LABEL_T);
                debug_assert!(self.labelend[bt] != NONE);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                debug_assert_eq!(self.blossombase[bt], t);
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn solve(&mut self) -> Vec<usize> {
        if self.nedge == 0 {
            return vec![NONE; self.nvertex];
        }
        for _stage in 0..self.nvertex {
            self.label.fill(FREE);
            self.bestedge.fill(NONE);
            for b in self.nvertex..2 * self.nvertex {
                self.blossombestedges[b] = Vec::new();
            }
            self.allowedge.fill(false);
            self.queue.clear();
            for v in 0..self.nvertex {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == FREE {
                    self.assign_label(v, LABEL_S, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = self.queue.pop() {
                    debug_assert_eq!(self.label[self.inblossom[v]], LABEL_S);
                    for p in self.neighbend[v].clone() {
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == FREE {
                                self.assign_label(w, LABEL_T, p ^ 1);
                            } else if self.label[self.inblossom[w]] == LABEL_S {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == FREE {
                                debug_assert_eq!(self.label[self.inblossom[w]], LABEL_T);
                                self.label[w] = LABEL_T;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == LABEL_S {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == FREE
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                    if augmented {
                        break;
                    }
                }
                if augmented {
                    break;
                }

                // Dual update.
                let mut deltatype = -1;
                let mut delta = 0i64;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                if !self.maxcardinality {
                    deltatype = 1;
                    delta = *self.dualvar[..self.nvertex].iter().min().unwrap();
                }
                for v in 0..self.nvertex {
                    if self.label[self.inblossom[v]] == FREE && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == -1 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * self.nvertex {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == LABEL_S
                        && self.bestedge[b] != NONE
                    {
                        let kslack = self.slack(self.bestedge[b]);
                        debug_assert_eq!(kslack % 2, 0, "odd S-S slack breaks integrality");
                        let d = kslack / 2;
                        if deltatype == -1 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == LABEL_T
                        && (deltatype == -1 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == -1 {
                    debug_assert!(self.maxcardinality);
                    deltatype = 1;
                    delta = (*self.dualvar[..self.nvertex].iter().min().unwrap()).max(0);
                }
                for v in 0..self.nvertex {
                    match self.label[self.inblossom[v]] {
                        FREE => {}
                        LABEL_S => self.dualvar[v] -= delta,
                        LABEL_T => self.dualvar[v] += delta,
                        _ => unreachable!(),
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            FREE => {}
                            LABEL_S => self.dualvar[b] += delta,
                            LABEL_T => self.dualvar[b] -= delta,
                            _ => unreachable!(),
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == FREE {
                            i = j;
                        }
                        debug_assert_eq!(self.label[self.inblossom[i]], LABEL_S);
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], LABEL_S);
                        self.queue.push(i);
                    }
                    4 => self.expand_blossom(deltablossom, false),
                    _ => unreachable!(),
                }
            }
            if !augmented {
                break;
            }
            for b in self.nvertex..2 * self.nvertex {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == LABEL_S
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
        #[cfg(debug_assertions)]
        self.verify_optimum();
        for v in 0..self.nvertex {
            if self.mate[v] != NONE {
                self.mate[v] = self.endpoint[self.mate[v]];
            }
        }
        for v in 0..self.nvertex {
            debug_assert!(self.mate[v] == NONE || self.mate[self.mate[v]] == v);
        }
        std::mem::take(&mut self.mate)
    }

    /// Check the complementary-slackness conditions of the final solution.
    #[cfg(debug_assertions)]
    fn verify_optimum(&self) {
        let vdualoffset = if self.maxcardinality {
            (-self.dualvar[..self.nvertex].iter().copied().min().unwrap()).max(0)
        } else {
            0
        };
        assert!(self.dualvar[..self.nvertex].iter().min().unwrap() + vdualoffset >= 0);
        assert!(*self.dualvar[self.nvertex..].iter().min().unwrap() >= 0);
        for k in 0..self.nedge {
            let (i, j, w) = self.edges[k];
            let mut s = self.dualvar[i] + self.dualvar[j] - 2 * w;
            let mut iblossoms = vec![i];
            let mut jblossoms = vec![j];
            while self.blossomparent[*iblossoms.last().unwrap()] != NONE {
                iblossoms.push(self.blossomparent[*iblossoms.last().unwrap()]);
            }
            while self.blossomparent[*jblossoms.last().unwrap()] != NONE {
                jblossoms.push(self.blossomparent[*jblossoms.last().unwrap()]);
            }
            iblossoms.reverse();
            jblossoms.reverse();
            for (&bi, &bj) in iblossoms.iter().zip(jblossoms.iter()) {
                if bi != bj {
                    break;
                }
                s += 2 * self.dualvar[bi];
            }
            assert!(s >= 0);
            if self.mate[i] / 2 == k || self.mate[j] / 2 == k {
                assert!(self.mate[i] / 2 == k && self.mate[j] / 2 == k);
                assert_eq!(s, 0);
            }
        }
        for v in 0..self.nvertex {
            assert!(self.mate[v] != NONE || self.dualvar[v] + vdualoffset == 0);
        }
        for b in self.nvertex..2 * self.nvertex {
            if self.blossombase[b] != NONE && self.dualvar[b] > 0 {
                assert_eq!(self.blossomendps[b].len() % 2, 1);
                for (ix, &p) in self.blossomendps[b].iter().enumerate() {
                    if ix % 2 == 1 {
                        assert_eq!(self.mate[self.endpoint[p]], p ^ 1);
                        assert_eq!(self.mate[self.endpoint[p ^ 1]], p);
                    }
                }
            }
        }
    }
}

/// mate[v] = partner vertex or `usize::MAX`. Multiple edges between the same
/// pair are permitted (the solver simply never prefers the worse one);
/// self-loops are not.
pub fn max_weight_matching(
    nvertex: usize,
    edges: &[(usize, usize, i64)],
    max_cardinality: bool,
) -> Vec<usize> {
    Solver::new(nvertex, edges, max_cardinality).solve()
}

/// Minimum-weight perfect matching on an even vertex set. Weights must be
/// non-negative. Returns mate[] covering every vertex, or None when no
/// perfect matching exists.
pub fn min_weight_perfect_matching(nvertex: usize, edges: &[(usize, usize, i64)]) -> Option<Vec<usize>> {
    if nvertex == 0 {
        return Some(Vec::new());
    }
    if !nvertex.is_multiple_of(2) {
        return None;
    }
    let big = edges.iter().map(|e| e.2).max().unwrap_or(0) + 1;
    let flipped: Vec<(usize, usize, i64)> = edges.iter().map(|&(i, j, w)| (i, j, big - w)).collect();
    let mate = max_weight_matching(nvertex, &flipped, true);
    if mate.contains(&NONE) {
        return None;
    }
    Some(mate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn trivial_cases() {
        assert_eq!(max_weight_matching(0, &[], false), Vec::<usize>::new());
        assert_eq!(max_weight_matching(2, &[(0, 1, 1)], false), vec![1, 0]);
        // Middle edge dominates without max-cardinality.
        assert_eq!(
            max_weight_matching(4, &[(0, 1, 5), (1, 2, 11), (2, 3, 5)], false),
            vec![NONE, 2, 1, NONE]
        );
        // Max-cardinality forces the outer pair.
        assert_eq!(
            max_weight_matching(4, &[(0, 1, 5), (1, 2, 11), (2, 3, 5)], true),
            vec![1, 0, 3, 2]
        );
    }

    #[test]
    fn creates_blossom_s_to_t() {
        // Van Rantwijk regression: nested S-blossom, relabel as T.
        let edges = [
            (0, 1, 9),
            (0, 2, 8),
            (1, 2, 10),
            (2, 3, 7),
            (4, 5, 6),
            (3, 4, 5),
        ];
        let mate = max_weight_matching(6, &edges, false);
        assert_eq!(mate, vec![1, 0, 3, 2, 5, 4]);
    }

    #[test]
    fn blossom_expansion_cases() {
        // S-blossom, relabel as T-blossom, expand (van Rantwijk test 24).
        let edges = [
            (0, 1, 8),
            (0, 2, 8),
            (1, 2, 10),
            (2, 3, 12),
            (3, 4, 12),
            (4, 5, 14),
            (4, 6, 12),
            (5, 6, 12),
            (6, 7, 12),
            (7, 8, 11),
            (8, 9, 10),
        ];
        let mate = max_weight_matching(10, &edges, false);
        assert_eq!(mate, vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8]);
    }

    /// Brute force maximum-weight matching over all matchings.
    fn brute_force(n: usize, edges: &[(usize, usize, i64)], max_card: bool) -> (usize, i64) {
        fn go(
            edges: &[(usize, usize, i64)],
            used: &mut Vec<bool>,
            idx: usize,
            card: usize,
            weight: i64,
            best: &mut (usize, i64),
            max_card: bool,
        ) {
            let key = |c: usize, w: i64| if max_card { (c as i64, w) } else { (0, w) };
            if key(card, weight) > key(best.0, best.1) {
                *best = (card, weight);
            }
            if idx == edges.len() {
                return;
            }
            go(edges, used, idx + 1, card, weight, best, max_card);
            let (i, j, w) = edges[idx];
            if !used[i] && !used[j] {
                used[i] = true;
                used[j] = true;
                go(edges, used, idx + 1, card + 1, weight + w, best, max_card);
                used[i] = false;
                used[j] = false;
            }
        }
        let mut best = (0, i64::MIN);
        go(edges, &mut vec![false; n], 0, 0, 0, &mut best, max_card);
        if best.1 == i64::MIN {
            best.1 = 0;
        }
        best
    }

    #[test]
    fn fuzz_against_brute_force() {
        let mut rng = CounterRng::new(0xB10550, 0);
        for case in 0..400 {
            let n = 2 + (rng.below_n(7) as usize); // 2..=8 vertices
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.below(0.6) {
                        edges.push((i, j, rng.below_n(40) as i64));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            for max_card in [false, true] {
                let mate = max_weight_matching(n, &edges, max_card);
                // The generator emits each (i, j) pair at most once.
                let mut weight = 0i64;
                let mut card = 0usize;
                for &(i, j, w) in &edges {
                    if mate[i] == j && mate[j] == i {
                        weight += w;
                        card += 1;
                    }
                }
                let (bc, bw) = brute_force(n, &edges, max_card);
                if max_card {
                    assert_eq!(card, bc, "case {case}: cardinality");
                }
                assert_eq!(weight, bw, "case {case} max_card {max_card}: weight");
            }
        }
    }

    #[test]
    fn perfect_matching_reduction() {
        // Square with one cheap diagonal: perfect matching must avoid it.
        let edges = [(0, 1, 2), (1, 2, 3), (2, 3, 2), (0, 3, 3), (0, 2, 1)];
        let mate = min_weight_perfect_matching(4, &edges).unwrap();
        let weight: i64 = [(0usize, 1usize), (2, 3)]
            .iter()
            .map(|&(i, _)| {
                let j = mate[i];
                edges
                    .iter()
                    .filter(|e| (e.0 == i && e.1 == j) || (e.0 == j && e.1 == i))
                    .map(|e| e.2)
                    .min()
                    .unwrap()
            })
            .sum();
        // Optimal pairing is (0,1) + (2,3) = 4 (diagonal would strand vertices).
        assert_eq!(mate[0], 1);
        assert_eq!(mate[2], 3);
        assert_eq!(weight, 4);
        // Odd vertex count has no perfect matching.
        assert!(min_weight_perfect_matching(3, &[(0, 1, 1), (1, 2, 1)]).is_none());
    }
}
