//! Published finite objects the computations are checked against.

use crate::forms::DiagonalForm;

fn form(c: &[u64]) -> DiagonalForm {
    DiagonalForm::new(c.to_vec()).expect("reference forms have positive coefficients")
}

/// The quaternaries whose prime-universality needed new arguments.
pub fn candidates() -> Vec<DiagonalForm> {
    let mut out: Vec<DiagonalForm> = [[2, 3, 4, 5], [2, 3, 4, 11], [2, 3, 5, 5], [2, 3, 5, 11], [2, 3, 5, 13], [2, 3, 5, 14], [2, 3, 5, 16], [2, 3, 5, 17]]
        .iter()
        .map(|c| form(c))
        .collect();
    for h in (20..=27).chain(29..=33).chain([35, 36, 38, 40, 41, 43]) {
        out.push(form(&[2, 3, 5, h]));
    }
    out
}

/// The five proper prime-universal ternaries.
pub fn proper_ternaries() -> Vec<DiagonalForm> {
    [[1, 1, 2], [1, 1, 3], [1, 2, 3], [1, 2, 4], [1, 2, 5]].iter().map(|c| form(c)).collect()
}

/// Last coefficient of a row of the rank 5 and 6 table.
#[derive(Debug, Clone, Copy)]
pub enum Last {
    /// The row is a single form.
    None,
    Values(&'static [u64]),
    /// `lo <= a <= hi`, `a` not in the exclusion list.
    Range { lo: u64, hi: u64, except: &'static [u64] },
}

#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub prefix: &'static [u64],
    pub last: Last,
}

const fn row(prefix: &'static [u64], last: Last) -> TableRow {
    TableRow { prefix, last }
}

const fn range(lo: u64, hi: u64, except: &'static [u64]) -> Last {
    Last::Range { lo, hi, except }
}

/// Proper prime-universal forms of rank 5 and 6, as printed.
pub const PROPER_HIGHER_ROWS: &[TableRow] = &[
    row(&[2, 2, 2, 2, 3], Last::None),
    row(&[2, 2, 2, 3], Last::Values(&[8, 11, 17])),
    row(&[2, 2, 3, 8, 17], Last::None),
    row(&[2, 2, 3, 11, 17], Last::None),
    row(&[2, 2, 3, 16, 17], Last::None),
    row(&[2, 2, 3, 17], range(17, 41, &[26, 32, 35, 40])),
    row(&[2, 3, 3, 3, 4], Last::None),
    row(&[2, 3, 3, 4], Last::Values(&[4, 6, 10, 13])),
    row(&[2, 3, 4, 4], range(4, 17, &[5, 8, 9, 11, 16])),
    row(&[2, 3, 4, 6], range(6, 23, &[8, 9, 11, 22])),
    row(&[2, 3, 4, 7], range(7, 17, &[8, 9, 11, 16])),
    row(&[2, 3, 4, 10], range(10, 23, &[11, 22])),
    row(&[2, 3, 4, 12, 13], Last::None),
    row(&[2, 3, 4, 13], range(13, 23, &[13, 22])),
    row(&[2, 3, 5, 7], Last::Values(&[7, 19, 28, 34])),
    row(&[2, 3, 5, 19, 19], Last::None),
    row(&[2, 3, 6, 6, 7], Last::None),
    row(&[2, 3, 6, 7], range(7, 23, &[8, 19, 20, 22])),
    row(&[2, 3, 6, 7, 19, 20], Last::None),
    row(&[2, 3, 6, 7, 20], range(20, 67, &[21, 23, 63, 66])),
    row(&[2, 3, 7, 7], range(7, 13, &[7, 8, 9, 10, 12])),
    row(&[2, 3, 7, 7, 7, 10], Last::None),
    row(&[2, 3, 7, 9], range(9, 13, &[9, 12])),
    row(&[2, 3, 7, 10], range(10, 23, &[17, 19, 22])),
    row(&[2, 3, 7, 11], range(11, 17, &[11, 13, 16])),
    row(&[2, 3, 7, 12, 13], Last::None),
    row(&[2, 3, 7, 13], range(13, 17, &[13, 16])),
];

impl TableRow {
    pub fn expand(&self) -> Vec<DiagonalForm> {
        let with = |a: u64| {
            let mut c = self.prefix.to_vec();
            c.push(a);
            form(&c)
        };
        match self.last {
            Last::None => vec![form(self.prefix)],
            Last::Values(v) => v.iter().map(|&a| with(a)).collect(),
            Last::Range { lo, hi, except } => (lo..=hi).filter(|a| !except.contains(a)).map(with).collect(),
        }
    }
}

/// Every form of the rank 5 and 6 table, sorted.
pub fn proper_higher() -> Vec<DiagonalForm> {
    let mut out: Vec<DiagonalForm> = PROPER_HIGHER_ROWS.iter().flat_map(TableRow::expand).collect();
    out.sort_by(|a, b| a.coeffs().cmp(b.coeffs()));
    out.dedup();
    out
}

/// Forms excluded by a row condition: same prefix, last coefficient in the
/// printed range but listed as an exception.
pub fn excluded_by_conditions() -> Vec<DiagonalForm> {
    let mut out = Vec::new();
    for r in PROPER_HIGHER_ROWS {
        if let Last::Range { except, .. } = r.last {
            for &a in except {
                let mut c = r.prefix.to_vec();
                c.push(a);
                out.push(form(&c));
            }
        }
    }
    out
}

/// Rank-4 forms that are not prime-universal but can be escalated to a
/// proper form of higher rank, grouped by ternary prefix.
pub const RANK4_FRONTIER: &[(&[u64], &[u64])] = &[
    (&[2, 2, 2], &[2, 3]),
    (&[2, 2, 3], &[8, 11, 16, 17]),
    (&[2, 3, 3], &[3, 4, 6]),
    (&[2, 3, 4], &[4, 6, 7, 10, 12, 13]),
    (&[2, 3, 5], &[7, 19, 28, 34, 37, 39, 42]),
    (&[2, 3, 6], &[6, 7]),
    (&[2, 3, 7], &[7, 9, 10, 11, 12, 13]),
];

pub fn rank4_frontier() -> Vec<DiagonalForm> {
    RANK4_FRONTIER
        .iter()
        .flat_map(|(p, tails)| {
            tails.iter().map(move |&a| {
                let mut c = p.to_vec();
                c.push(a);
                form(&c)
            })
        })
        .collect()
}

/// Forms representing every prime but one, keyed by that prime.
pub const ONE_EXCEPTION: &[(u64, &[&[u64]])] = &[
    (2, &[&[1, 3, 4]]),
    (3, &[&[1, 1, 6]]),
    (5, &[&[1, 2, 6, 10]]),
    (7, &[&[1, 1, 1, 9]]),
    (13, &[&[2, 3, 3, 4], &[2, 3, 4, 12]]),
    (17, &[&[2, 2, 2, 3], &[2, 3, 4, 4], &[2, 3, 4, 7], &[2, 3, 7, 11], &[2, 3, 7, 13]]),
    (23, &[&[2, 3, 4, 6], &[2, 3, 4, 10], &[2, 3, 4, 13], &[2, 3, 6, 7, 19], &[2, 3, 6, 7, 22]]),
    (41, &[&[2, 2, 3, 17]]),
    (43, &[&[2, 3, 5, 19]]),
    (67, &[&[2, 3, 6, 7, 20]]),
];

/// Forms with several missed primes, with the complete list.
pub const SEVERAL_EXCEPTIONS: &[(&[u64], &[u64])] = &[
    (&[2, 3, 6, 7], &[23, 47, 67]),
    (&[2, 3, 7, 9], &[13, 97]),
    (&[2, 3, 7, 11], &[17]),
    (&[2, 3, 7, 13], &[17]),
    (&[2, 3, 10, 21], &[13, 17, 43, 47]),
];

/// Stated prime truants.
pub const TRUANTS: &[(&[u64], u64)] = &[
    (&[2, 2, 2, 3], 17),
    (&[2, 2, 3, 17], 41),
    (&[2, 3, 3, 4], 13),
    (&[2, 3, 4, 4], 17),
    (&[2, 3, 4, 6], 23),
    (&[2, 3, 4, 12], 13),
    (&[2, 3, 5, 19], 43),
    (&[2, 3, 6, 7], 23),
    (&[2, 3, 6, 7, 19], 23),
    (&[2, 3, 6, 7, 20], 67),
    (&[2, 3, 6, 7, 22], 23),
];
