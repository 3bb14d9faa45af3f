#ifndef FEDCACHE_PROTOCOL_HPP
#define FEDCACHE_PROTOCOL_HPP

#include "fedcache/encoder.hpp"
#include "fedcache/numeric.hpp"
#include "fedcache/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace fedcache {

// Wire accounting: 8 bytes per real, 4 bytes per integer id, label or count.

inline constexpr std::uint64_t kRealBytes = 8;
inline constexpr std::uint64_t kIntBytes = 4;

/// Client -> server, once per private sample: (k, i), label, hash.
struct HashUpload {
    SampleIndex id;
    int label = 0;
    HashVector hash;
};

/// Client -> server, per sample per round: (k, i) and its logits.
struct KnowledgeUpload {
    SampleIndex id;
    RealVector logits;
};

/// Server -> client reply to a KnowledgeUpload: the ensembled teacher
/// distribution. `id` routes the reply and is not counted on the wire; an
/// absent teacher sends no payload.
struct EnsembleDown {
    SampleIndex id;
    std::optional<RealVector> teacher;
};

/// FD client -> server at the end of a round: per-class mean logits (row y,
/// C x C) and per-class sample counts.
struct FdClassUpload {
    int client = 0;
    RealMatrix class_logits;
    std::vector<int> counts;
};

/// FD server -> client: per-class leave-one-out teacher logits (row y) with
/// the classes for which a teacher exists.
struct FdClassDown {
    int client = 0;
    RealMatrix teacher_logits;
    std::vector<bool> present;
};

using Message = std::variant<HashUpload, KnowledgeUpload, EnsembleDown, FdClassUpload, FdClassDown>;

enum class MessageKind : std::size_t { hash_upload, knowledge_upload, ensemble_down, fd_class_upload, fd_class_down };
inline constexpr std::size_t kMessageKinds = 5;

enum class Direction { up, down };

MessageKind kind_of(const Message& m);
Direction direction_of(MessageKind kind);
std::uint64_t byte_size(const Message& m);

/// Cumulative per-kind traffic with per-round snapshots. Round 0 is the
/// initialization phase.
class CommLedger {
public:
    struct RoundTraffic {
        int round = 0;
        std::uint64_t up = 0;
        std::uint64_t down = 0;
    };

    void record(const Message& m);
    /// Closes the current round: snapshots the traffic since the previous close.
    void close_round(int round);

    std::uint64_t total() const { return up_ + down_; }
    std::uint64_t total(Direction d) const { return d == Direction::up ? up_ : down_; }
    std::uint64_t bytes(MessageKind k) const { return bytes_[static_cast<std::size_t>(k)]; }
    std::uint64_t count(MessageKind k) const { return counts_[static_cast<std::size_t>(k)]; }
    const std::vector<RoundTraffic>& rounds() const { return rounds_; }

private:
    std::uint64_t up_ = 0;
    std::uint64_t down_ = 0;
    std::uint64_t open_up_ = 0;
    std::uint64_t open_down_ = 0;
    std::array<std::uint64_t, kMessageKinds> bytes_{};
    std::array<std::uint64_t, kMessageKinds> counts_{};
    std::vector<RoundTraffic> rounds_;
};

}  // namespace fedcache

#endif
