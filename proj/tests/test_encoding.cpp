#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "xq/encoding.hpp"
#include "xq/errors.hpp"
#include "xq/notation.hpp"

using namespace xq;

TEST_CASE("plane encoding of the initial position") {
    PlaneTensor t = encode_state(initial_position());

    double piece_sum = 0.0;
    double red_soldiers = 0.0;
    double side_sum = 0.0;
    for (int r = 0; r < kNumRanks; ++r)
        for (int f = 0; f < kNumFiles; ++f) {
            for (int c = 0; c < 14; ++c) piece_sum += t.at(r, f, c);
            red_soldiers += t.at(r, f, static_cast<int>(PieceKind::Soldier));
            side_sum += t.at(r, f, 14);
        }
    CHECK(piece_sum == 32.0);
    CHECK(red_soldiers == 5.0);
    CHECK(side_sum == 90.0);  // channel 14 all ones with Red to move

    PlaneTensor black = encode_state(
        parse_fen("rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR b"));
    double black_side_sum = 0.0;
    for (int r = 0; r < kNumRanks; ++r)
        for (int f = 0; f < kNumFiles; ++f) black_side_sum += black.at(r, f, 14);
    CHECK(black_side_sum == 0.0);
}

TEST_CASE("two-generals fixture has exactly two hot piece cells") {
    PlaneTensor t = encode_state(parse_fen("4k4/9/9/9/9/4P4/9/9/9/4K4 b"));
    double sum = 0.0;
    for (int r = 0; r < kNumRanks; ++r)
        for (int f = 0; f < kNumFiles; ++f)
            for (int c = 0; c < 14; ++c) sum += t.at(r, f, c);
    CHECK(sum == 3.0);  // two generals and the river-blocking soldier

    PlaneTensor bare = encode_state(parse_fen("3k5/9/9/9/9/9/9/9/9/4K4 w"));
    double bare_sum = 0.0;
    for (int r = 0; r < kNumRanks; ++r)
        for (int f = 0; f < kNumFiles; ++f)
            for (int c = 0; c < 14; ++c) bare_sum += bare.at(r, f, c);
    CHECK(bare_sum == 2.0);
}

TEST_CASE("piece channels are one-hot and count-preserving on random states") {
    for (const GameState& s : testutil::random_walk_states(31, 150)) {
        PlaneTensor t = encode_state(s);
        int pieces = 0;
        for (int i = 0; i < kNumSquares; ++i)
            if (s.piece_at(Square::from_index(i))) ++pieces;

        double total = 0.0;
        for (int r = 0; r < kNumRanks; ++r)
            for (int f = 0; f < kNumFiles; ++f) {
                double cell = 0.0;
                for (int c = 0; c < 14; ++c) cell += t.at(r, f, c);
                REQUIRE(cell <= 1.0);  // at most one piece channel hot per square
                total += cell;
            }
        REQUIRE(total == static_cast<double>(pieces));
    }
}

TEST_CASE("states differing in occupancy or side encode differently") {
    GameState s = initial_position();
    PlaneTensor base = encode_state(s);
    CHECK(encode_state(apply_move(s, parse_iccs_move("b2-e2"))) != base);
    CHECK(encode_state(parse_fen("rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR b")) !=
          base);
}

TEST_CASE("action index arithmetic") {
    CHECK(encode_action(Move{{0, 0}, {0, 1}}) == 9);
    CHECK(encode_action(Move{{1, 0}, {1, 1}}) == 1 * 90 + 10);
    CHECK(decode_action(9) == Move{{0, 0}, {0, 1}});
    CHECK(decode_action(100) == Move{Square::from_index(1), Square::from_index(10)});
    // Highest index reachable by a real move; 8099 is codomain-only.
    CHECK(encode_action(Move{Square::from_index(89), Square::from_index(88)}) == 8098);
    CHECK_THROWS_AS(decode_action(8099), DegenerateActionError);
    CHECK_THROWS_AS(decode_action(0), DegenerateActionError);
    CHECK_THROWS_AS(decode_action(-1), DegenerateActionError);
    CHECK_THROWS_AS(decode_action(8100), DegenerateActionError);
}

TEST_CASE("action encode/decode is a bijection over the 8010 valid pairs") {
    int checked = 0;
    for (int from = 0; from < kNumSquares; ++from)
        for (int to = 0; to < kNumSquares; ++to) {
            if (from == to) continue;
            Move m{Square::from_index(from), Square::from_index(to)};
            REQUIRE(decode_action(encode_action(m)) == m);
            ++checked;
        }
    CHECK(checked == 8010);
}

TEST_CASE("legal mask matches the move list") {
    GameState start = initial_position();
    LegalMask mask = legal_mask(start);
    CHECK(mask.count() == 44);
    for (Move m : legal_moves(start)) CHECK(mask[encode_action(m)]);
    for (int i = 0; i < kNumSquares; ++i) CHECK_FALSE(mask[i * 90 + i]);

    // Terminal position: nothing is legal.
    CHECK(legal_mask(parse_fen("R3k4/3P5/9/9/9/4P4/9/9/9/4K4 b")).none());

    for (const GameState& s : testutil::random_walk_states(37, 60))
        REQUIRE(legal_mask(s).count() == legal_moves(s).size());
}

TEST_CASE("mask_and_normalize") {
    GameState start = initial_position();
    LegalMask mask = legal_mask(start);

    SUBCASE("uniform policy becomes uniform over legal moves") {
        PolicyVector uniform(kPolicySize, 1.0 / kPolicySize);
        PolicyVector out = mask_and_normalize(uniform, mask);
        double sum = 0.0;
        for (int i = 0; i < kPolicySize; ++i) {
            if (mask[i]) CHECK(out[i] == doctest::Approx(1.0 / 44).epsilon(1e-12));
            else CHECK(out[i] == 0.0);
            sum += out[i];
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    SUBCASE("mass on one legal action is unchanged") {
        PolicyVector p(kPolicySize, 0.0);
        int legal = encode_action(legal_moves(start)[0]);
        p[legal] = 1.0;
        PolicyVector out = mask_and_normalize(p, mask);
        CHECK(out[legal] == 1.0);
    }
    SUBCASE("zero masked-in mass falls back to uniform over legal") {
        PolicyVector p(kPolicySize, 0.0);
        p[0 * 90 + 1] = 0.0;  // nothing legal carries mass
        LegalMask two;
        two.set(9);
        two.set(100);
        PolicyVector out = mask_and_normalize(p, two);
        CHECK(out[9] == 0.5);
        CHECK(out[100] == 0.5);
    }
    SUBCASE("an empty mask is an error") {
        PolicyVector p(kPolicySize, 1.0 / kPolicySize);
        CHECK_THROWS_AS(mask_and_normalize(p, LegalMask{}), NoLegalActionError);
    }
}
