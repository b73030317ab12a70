#pragma once

#include <bitset>
#include <vector>

#include "xq/rules.hpp"

namespace xq {

inline constexpr int kNumChannels = 15;
inline constexpr int kPlaneInputSize = kNumRanks * kNumFiles * kNumChannels;  // 1350
inline constexpr int kPolicySize = kNumSquares * kNumSquares;                 // 8100

// 10x9x15 binary feature planes, stored rank-major, then file, then channel.
// Channels 0-6 hold Red pieces in kind order, 7-13 Black, 14 the side to
// move (all ones iff Red).
class PlaneTensor {
  public:
    static constexpr int offset(int rank, int file, int channel) {
        return (rank * kNumFiles + file) * kNumChannels + channel;
    }

    double at(int rank, int file, int channel) const {
        return bits_[offset(rank, file, channel)] ? 1.0 : 0.0;
    }
    void set(int rank, int file, int channel, bool value) {
        bits_[offset(rank, file, channel)] = value;
    }

    // Flattened values in storage order, as network inputs.
    std::vector<double> flatten() const;

    std::size_t popcount() const { return bits_.count(); }
    bool operator==(const PlaneTensor&) const = default;

  private:
    std::bitset<kPlaneInputSize> bits_;
};

// Flat move index: from.square_index * 90 + to.square_index, in [0, 8099].
using ActionIndex = int;

using PolicyVector = std::vector<double>;      // length kPolicySize
using LegalMask = std::bitset<kPolicySize>;

PlaneTensor encode_state(const GameState& state);

ActionIndex encode_action(Move move);

// Throws DegenerateActionError when the index maps to from == to (the 90
// diagonal indices the codomain admits but no move occupies).
Move decode_action(ActionIndex index);

LegalMask legal_mask(const GameState& state);

// out[i] = policy[i] * mask[i] / sum; a zero-mass masked policy falls back to
// uniform over the masked-in entries. Throws NoLegalActionError on an empty
// mask.
PolicyVector mask_and_normalize(const PolicyVector& policy, const LegalMask& mask);

}  // namespace xq
