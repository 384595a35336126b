use super::position::Position;
use super::types::{Color, PieceKind};

/// Outcome classification of a position within a game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameStatus {
    Ongoing,
    WhiteWins,
    BlackWins,
    DrawStalemate,
    DrawFifty,
    DrawThreefold,
    DrawInsufficient,
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        self != GameStatus::Ongoing
    }

    pub fn is_draw(self) -> bool {
        matches!(
            self,
            GameStatus::DrawStalemate
                | GameStatus::DrawFifty
                | GameStatus::DrawThreefold
                | GameStatus::DrawInsufficient
        )
    }

    pub fn winner(self) -> Option<Color> {
        match self {
            GameStatus::WhiteWins => Some(Color::White),
            GameStatus::BlackWins => Some(Color::Black),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GameStatus::Ongoing => "ongoing",
            GameStatus::WhiteWins => "white-wins",
            GameStatus::BlackWins => "black-wins",
            GameStatus::DrawStalemate => "stalemate",
            GameStatus::DrawFifty => "fifty-move",
            GameStatus::DrawThreefold => "threefold",
            GameStatus::DrawInsufficient => "insufficient-material",
        }
    }

    pub fn from_str_tag(s: &str) -> Option<GameStatus> {
        Some(match s {
            "ongoing" => GameStatus::Ongoing,
            "white-wins" => GameStatus::WhiteWins,
            "black-wins" => GameStatus::BlackWins,
            "stalemate" => GameStatus::DrawStalemate,
            "fifty-move" => GameStatus::DrawFifty,
            "threefold" => GameStatus::DrawThreefold,
            "insufficient-material" => GameStatus::DrawInsufficient,
            _ => return None,
        })
    }
}

/// K vs K, K+minor vs K, and K+B vs K+B with bishops on one square colour.
pub fn insufficient_material(p: &Position) -> bool {
    let heavy = [PieceKind::Pawn, PieceKind::Rook, PieceKind::Queen];
    if Color::BOTH
        .iter()
        .any(|&c| heavy.iter().any(|&k| p.count(c, k) > 0))
    {
        return false;
    }
    let minors = |c| p.count(c, PieceKind::Knight) + p.count(c, PieceKind::Bishop);
    let (w, b) = (minors(Color::White), minors(Color::Black));
    match (w, b) {
        (0, 0) | (1, 0) | (0, 1) => true,
        (1, 1) => {
            let wb = p.pieces(Color::White, PieceKind::Bishop);
            let bb = p.pieces(Color::Black, PieceKind::Bishop);
            if wb == 0 || bb == 0 {
                return false;
            }
            const DARK: u64 = 0xAA55_AA55_AA55_AA55;
            (wb & DARK != 0) == (bb & DARK != 0)
        }
        _ => false,
    }
}

/// Classifies `p`. `history` holds the Zobrist hashes of every position of
/// the game so far, including `p` itself; the threefold rule fires when
/// `p`'s hash occurs at least three times in it.
pub fn game_status(p: &Position, history: &[u64]) -> GameStatus {
    if !p.has_legal_move() {
        return if p.in_check() {
            match p.side_to_move() {
                Color::White => GameStatus::BlackWins,
                Color::Black => GameStatus::WhiteWins,
            }
        } else {
            GameStatus::DrawStalemate
        };
    }
    if insufficient_material(p) {
        return GameStatus::DrawInsufficient;
    }
    if p.halfmove_clock() >= 100 {
        return GameStatus::DrawFifty;
    }
    let key = p.zobrist();
    if history.iter().filter(|&&h| h == key).count() >= 3 {
        return GameStatus::DrawThreefold;
    }
    GameStatus::Ongoing
}

/// Status ignoring repetition, used inside search where history is unknown.
pub fn static_status(p: &Position) -> GameStatus {
    game_status(p, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::types::Move;

    fn fen(s: &str) -> Position {
        Position::from_fen(s).unwrap()
    }

    #[test]
    fn back_rank_mate() {
        let p = fen("6k1/5ppp/8/8/8/8/8/3R2K1 w - - 0 1");
        let mated = p.apply_move(Move::from_uci("d1d8").unwrap()).unwrap();
        assert_eq!(game_status(&mated, &[]), GameStatus::WhiteWins);
    }

    #[test]
    fn stalemate() {
        let p = fen("k7/8/1Q6/8/8/8/8/K7 b - - 0 1");
        assert!(p.legal_moves().is_empty());
        assert_eq!(game_status(&p, &[]), GameStatus::DrawStalemate);
    }

    #[test]
    fn fifty_move_threshold() {
        let p = fen("k7/8/8/8/8/8/8/KR6 w - - 100 80");
        assert_eq!(game_status(&p, &[]), GameStatus::DrawFifty);
        let p = fen("k7/8/8/8/8/8/8/KR6 w - - 99 80");
        assert_eq!(game_status(&p, &[]), GameStatus::Ongoing);
    }

    #[test]
    fn threefold_counts_history() {
        let p = Position::startpos();
        let h = p.zobrist();
        assert_eq!(game_status(&p, &[h, 1, h]), GameStatus::Ongoing);
        assert_eq!(game_status(&p, &[h, 1, h, 2, h]), GameStatus::DrawThreefold);
    }

    #[test]
    fn insufficient_material_cases() {
        assert!(insufficient_material(&fen("k7/8/8/8/8/8/8/K7 w - - 0 1")));
        assert!(insufficient_material(&fen("k7/8/8/8/8/8/8/KN6 w - - 0 1")));
        assert!(insufficient_material(&fen("k7/8/8/8/8/8/8/KB6 w - - 0 1")));
        // b8 and c1 are both dark
        assert!(insufficient_material(&fen("kb6/8/8/8/8/8/8/K1B5 w - - 0 1")));
        // b8 dark, b1 light
        assert!(!insufficient_material(&fen("kb6/8/8/8/8/8/8/KB6 w - - 0 1")));
        assert!(!insufficient_material(&fen("k7/8/8/8/8/8/8/KNN5 w - - 0 1")));
        assert!(!insufficient_material(&fen("k7/8/8/8/8/8/P7/K7 w - - 0 1")));
        let bare = fen("k7/8/8/8/8/8/8/K7 w - - 0 1");
        assert_eq!(game_status(&bare, &[]), GameStatus::DrawInsufficient);
    }
}
