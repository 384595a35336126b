//! Independent 10×12 mailbox move generator used as a perft oracle.
//! Shares no code with the bitboard rules core: own FEN reader, own attack
//! test, legality by make-and-check.

#![allow(dead_code)]

const OFF: i8 = 7;
const PAWN: i8 = 1;
const KNIGHT: i8 = 2;
const BISHOP: i8 = 3;
const ROOK: i8 = 4;
const QUEEN: i8 = 5;
const KING: i8 = 6;

const KNIGHT_STEPS: [i32; 8] = [-21, -19, -12, -8, 8, 12, 19, 21];
const BISHOP_STEPS: [i32; 4] = [-11, -9, 9, 11];
const ROOK_STEPS: [i32; 4] = [-10, -1, 1, 10];
const KING_STEPS: [i32; 8] = [-11, -10, -9, -1, 1, 9, 10, 11];

/// Mailbox index of a1 is 91, h8 is 28; rank r (0-based from 1), file f.
fn idx(file: i32, rank: i32) -> usize {
    (91 - 10 * rank + file) as usize
}

fn name(i: usize) -> String {
    let i = i as i32;
    let file = (i % 10) - 1;
    let rank = 10 - i / 10;
    format!("{}{}", (b'a' + file as u8) as char, rank)
}

#[derive(Clone)]
pub struct Board {
    sq: [i8; 120],
    white: bool,
    // K, Q, k, q
    castle: [bool; 4],
    ep: Option<usize>,
}

#[derive(Clone, Copy)]
pub struct Mv {
    from: usize,
    to: usize,
    promo: i8,
}

impl Mv {
    pub fn uci(&self) -> String {
        let p = match self.promo {
            KNIGHT => "n",
            BISHOP => "b",
            ROOK => "r",
            QUEEN => "q",
            _ => "",
        };
        format!("{}{}{}", name(self.from), name(self.to), p)
    }
}

impl Board {
    pub fn from_fen(fen: &str) -> Board {
        let f: Vec<&str> = fen.split_whitespace().collect();
        let mut sq = [OFF; 120];
        for r in 0..8 {
            for c in 0..8 {
                sq[idx(c, r)] = 0;
            }
        }
        for (ri, row) in f[0].split('/').enumerate() {
            let rank = 7 - ri as i32;
            let mut file = 0;
            for ch in row.chars() {
                if let Some(n) = ch.to_digit(10) {
                    file += n as i32;
                    continue;
                }
                let kind = match ch.to_ascii_lowercase() {
                    'p' => PAWN,
                    'n' => KNIGHT,
                    'b' => BISHOP,
                    'r' => ROOK,
                    'q' => QUEEN,
                    'k' => KING,
                    _ => panic!("bad piece {ch}"),
                };
                sq[idx(file, rank)] = if ch.is_ascii_uppercase() { kind } else { -kind };
                file += 1;
            }
        }
        let c = f[2];
        let ep = if f[3] == "-" {
            None
        } else {
            let b = f[3].as_bytes();
            Some(idx((b[0] - b'a') as i32, (b[1] - b'1') as i32))
        };
        Board {
            sq,
            white: f[1] == "w",
            castle: [c.contains('K'), c.contains('Q'), c.contains('k'), c.contains('q')],
            ep,
        }
    }

    fn attacked(&self, s: usize, by_white: bool) -> bool {
        let sign: i8 = if by_white { 1 } else { -1 };
        let s = s as i32;
        let at = |i: i32| self.sq[i as usize];
        // pawns attack toward the opponent: white pawns sit below (larger index)
        let pawn_from = if by_white { [s + 9, s + 11] } else { [s - 9, s - 11] };
        if pawn_from.iter().any(|&i| at(i) == sign * PAWN) {
            return true;
        }
        if KNIGHT_STEPS.iter().any(|&d| at(s + d) == sign * KNIGHT) {
            return true;
        }
        if KING_STEPS.iter().any(|&d| at(s + d) == sign * KING) {
            return true;
        }
        for (steps, slider) in [(BISHOP_STEPS, BISHOP), (ROOK_STEPS, ROOK)] {
            for d in steps {
                let mut i = s + d;
                loop {
                    let v = at(i);
                    if v == 0 {
                        i += d;
                        continue;
                    }
                    if v == sign * slider || v == sign * QUEEN {
                        return true;
                    }
                    break;
                }
            }
        }
        false
    }

    fn king(&self, white: bool) -> usize {
        let k = if white { KING } else { -KING };
        self.sq.iter().position(|&v| v == k).expect("king present")
    }

    fn pseudo(&self) -> Vec<Mv> {
        let mut out = Vec::new();
        let sign: i8 = if self.white { 1 } else { -1 };
        let own = |v: i8| v != OFF && v * sign > 0;
        let enemy = |v: i8| v != OFF && v * sign < 0;
        for from in 21..99usize {
            let v = self.sq[from];
            if v == OFF || v * sign <= 0 {
                continue;
            }
            let f = from as i32;
            match v.abs() {
                PAWN => {
                    let fwd = if self.white { -10 } else { 10 };
                    let start_rank = if self.white { (81..89).contains(&from) } else { (31..39).contains(&from) };
                    let last = |t: i32| if self.white { t < 30 } else { t > 90 };
                    let push = |to: i32, out: &mut Vec<Mv>| {
                        if last(to) {
                            for p in [KNIGHT, BISHOP, ROOK, QUEEN] {
                                out.push(Mv { from, to: to as usize, promo: p });
                            }
                        } else {
                            out.push(Mv { from, to: to as usize, promo: 0 });
                        }
                    };
                    if self.sq[(f + fwd) as usize] == 0 {
                        push(f + fwd, &mut out);
                        if start_rank && self.sq[(f + 2 * fwd) as usize] == 0 {
                            out.push(Mv { from, to: (f + 2 * fwd) as usize, promo: 0 });
                        }
                    }
                    for d in [fwd - 1, fwd + 1] {
                        let t = f + d;
                        if enemy(self.sq[t as usize]) || self.ep == Some(t as usize) {
                            push(t, &mut out);
                        }
                    }
                }
                KNIGHT | KING => {
                    let steps: &[i32] = if v.abs() == KNIGHT { &KNIGHT_STEPS } else { &KING_STEPS };
                    for &d in steps {
                        let t = (f + d) as usize;
                        let tv = self.sq[t];
                        if tv != OFF && !own(tv) {
                            out.push(Mv { from, to: t, promo: 0 });
                        }
                    }
                }
                kind => {
                    let steps: Vec<i32> = match kind {
                        BISHOP => BISHOP_STEPS.to_vec(),
                        ROOK => ROOK_STEPS.to_vec(),
                        _ => KING_STEPS.to_vec(),
                    };
                    for d in steps {
                        let mut t = f + d;
                        loop {
                            let tv = self.sq[t as usize];
                            if tv == OFF || own(tv) {
                                break;
                            }
                            out.push(Mv { from, to: t as usize, promo: 0 });
                            if tv != 0 {
                                break;
                            }
                            t += d;
                        }
                    }
                }
            }
        }
        // castling
        let (e, rights, opp) = if self.white { (95usize, [0usize, 1], false) } else { (25usize, [2, 3], true) };
        if self.sq[e] == sign * KING && !self.attacked(e, opp) {
            if self.castle[rights[0]]
                && self.sq[e + 1] == 0
                && self.sq[e + 2] == 0
                && self.sq[e + 3] == sign * ROOK
                && !self.attacked(e + 1, opp)
                && !self.attacked(e + 2, opp)
            {
                out.push(Mv { from: e, to: e + 2, promo: 0 });
            }
            if self.castle[rights[1]]
                && self.sq[e - 1] == 0
                && self.sq[e - 2] == 0
                && self.sq[e - 3] == 0
                && self.sq[e - 4] == sign * ROOK
                && !self.attacked(e - 1, opp)
                && !self.attacked(e - 2, opp)
            {
                out.push(Mv { from: e, to: e - 2, promo: 0 });
            }
        }
        out
    }

    pub fn make(&self, m: Mv) -> Board {
        let mut b = self.clone();
        let v = b.sq[m.from];
        b.sq[m.to] = if m.promo != 0 { m.promo * v.signum() } else { v };
        b.sq[m.from] = 0;
        if v.abs() == PAWN && Some(m.to) == self.ep {
            let victim = if self.white { m.to + 10 } else { m.to - 10 };
            b.sq[victim] = 0;
        }
        if v.abs() == KING && (m.to as i32 - m.from as i32).abs() == 2 {
            let (rf, rt) = if m.to > m.from { (m.from + 3, m.from + 1) } else { (m.from - 4, m.from - 1) };
            b.sq[rt] = b.sq[rf];
            b.sq[rf] = 0;
        }
        b.ep = None;
        if v.abs() == PAWN && (m.to as i32 - m.from as i32).abs() == 20 {
            b.ep = Some((m.to + m.from) / 2);
        }
        for (corner, right) in [(98usize, 0usize), (91, 1), (28, 2), (21, 3)] {
            if m.from == corner || m.to == corner {
                b.castle[right] = false;
            }
        }
        if m.from == 95 {
            b.castle[0] = false;
            b.castle[1] = false;
        }
        if m.from == 25 {
            b.castle[2] = false;
            b.castle[3] = false;
        }
        b.white = !self.white;
        b
    }

    pub fn legal(&self) -> Vec<Mv> {
        self.pseudo()
            .into_iter()
            .filter(|&m| {
                let b = self.make(m);
                !b.attacked(b.king(self.white), !self.white)
            })
            .collect()
    }

    pub fn perft(&self, depth: u32) -> u64 {
        if depth == 0 {
            return 1;
        }
        let moves = self.legal();
        if depth == 1 {
            return moves.len() as u64;
        }
        moves.iter().map(|&m| self.make(m).perft(depth - 1)).sum()
    }

    pub fn legal_uci(&self) -> Vec<String> {
        let mut v: Vec<String> = self.legal().iter().map(Mv::uci).collect();
        v.sort();
        v
    }
}
