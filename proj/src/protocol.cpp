#include "fedcache/protocol.hpp"

namespace fedcache {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t reals(Eigen::Index n) { return static_cast<std::uint64_t>(n) * kRealBytes; }

}  // namespace

MessageKind kind_of(const Message& m) { return static_cast<MessageKind>(m.index()); }

Direction direction_of(MessageKind kind) {
    switch (kind) {
        case MessageKind::hash_upload:
        case MessageKind::knowledge_upload:
        case MessageKind::fd_class_upload: return Direction::up;
        case MessageKind::ensemble_down:
        case MessageKind::fd_class_down: return Direction::down;
    }
    return Direction::up;
}

std::uint64_t byte_size(const Message& m) {
    return std::visit(
        overloaded{
            [](const HashUpload& h) { return reals(h.hash.size()) + 3 * kIntBytes; },
            [](const KnowledgeUpload& k) { return reals(k.logits.size()) + 2 * kIntBytes; },
            [](const EnsembleDown& e) { return e.teacher ? reals(e.teacher->size()) : std::uint64_t{0}; },
            [](const FdClassUpload& f) {
                return reals(f.class_logits.size()) + static_cast<std::uint64_t>(f.counts.size()) * kIntBytes;
            },
            [](const FdClassDown& f) { return reals(f.teacher_logits.size()); },
        },
        m);
}

void CommLedger::record(const Message& m) {
    const auto kind = kind_of(m);
    const auto size = byte_size(m);
    bytes_[static_cast<std::size_t>(kind)] += size;
    ++counts_[static_cast<std::size_t>(kind)];
    if (direction_of(kind) == Direction::up) {
        up_ += size;
        open_up_ += size;
    } else {
        down_ += size;
        open_down_ += size;
    }
}

void CommLedger::close_round(int round) {
    rounds_.push_back({round, open_up_, open_down_});
    open_up_ = 0;
    open_down_ = 0;
}

}  // namespace fedcache
