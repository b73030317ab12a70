#include "xq/encoding.hpp"

#include <string>

#include "xq/errors.hpp"

namespace xq {

std::vector<double> PlaneTensor::flatten() const {
    std::vector<double> out(kPlaneInputSize);
    for (int i = 0; i < kPlaneInputSize; ++i) out[i] = bits_[i] ? 1.0 : 0.0;
    return out;
}

PlaneTensor encode_state(const GameState& state) {
    PlaneTensor t;
    for (int rank = 0; rank < kNumRanks; ++rank) {
        for (int file = 0; file < kNumFiles; ++file) {
            auto p = state.piece_at({file, rank});
            if (p) {
                int channel = static_cast<int>(p->color) * kPieceKinds + static_cast<int>(p->kind);
                t.set(rank, file, channel, true);
            }
            if (state.side_to_move() == Color::Red) t.set(rank, file, 14, true);
        }
    }
    return t;
}

ActionIndex encode_action(Move move) {
    return move.from.index() * kNumSquares + move.to.index();
}

Move decode_action(ActionIndex index) {
    if (index < 0 || index >= kPolicySize)
        throw DegenerateActionError("action index out of range: " + std::to_string(index));
    int from = index / kNumSquares;
    int to = index % kNumSquares;
    if (from == to)
        throw DegenerateActionError("degenerate action index " + std::to_string(index) +
                                    " (from == to)");
    return {Square::from_index(from), Square::from_index(to)};
}

LegalMask legal_mask(const GameState& state) {
    LegalMask mask;
    for (Move m : legal_moves(state)) mask.set(encode_action(m));
    return mask;
}

PolicyVector mask_and_normalize(const PolicyVector& policy, const LegalMask& mask) {
    if (mask.none()) throw NoLegalActionError("mask admits no legal action");
    if (policy.size() != kPolicySize)
        throw ShapeMismatchError("policy vector has size " + std::to_string(policy.size()));
    PolicyVector out(kPolicySize, 0.0);
    double total = 0.0;
    for (int i = 0; i < kPolicySize; ++i)
        if (mask[i]) total += policy[i];
    if (total > 0.0) {
        for (int i = 0; i < kPolicySize; ++i)
            if (mask[i]) out[i] = policy[i] / total;
    } else {
        // An untrained model can put all mass on illegal moves; fall back to
        // uniform over the legal set rather than failing the search.
        double uniform = 1.0 / static_cast<double>(mask.count());
        for (int i = 0; i < kPolicySize; ++i)
            if (mask[i]) out[i] = uniform;
    }
    return out;
}

}  // namespace xq
