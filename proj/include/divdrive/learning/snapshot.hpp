#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "divdrive/learning/q_network.hpp"
#include "divdrive/sim/episode.hpp"
#include "divdrive/text_format.hpp"

namespace divdrive::learning {

/// Frozen policy parameters plus provenance. The network is shared and
/// immutable once the snapshot exists.
struct PolicySnapshot {
  std::shared_ptr<const QNetwork> network;
  std::int64_t session_id = 0;
  std::int64_t training_step = 0;
  double driving_score = std::numeric_limits<double>::quiet_NaN();
  std::string tag;

  [[nodiscard]] std::string id() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "s%02lld-%08lld", static_cast<long long>(session_id),
                  static_cast<long long>(training_step));
    return buf;
  }
};

/// Greedy action; ties go to the lowest action index.
inline int argmax_action(const Eigen::VectorXd& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

inline sim::Action act(const QNetwork& net, std::span<const double> obs) {
  return sim::action_from_index(argmax_action(net.forward(Eigen::MatrixXd(encode(obs))).col(0)));
}

inline sim::Action act(const PolicySnapshot& snap, std::span<const double> obs) { return act(*snap.network, obs); }
inline sim::Action act(const PolicySnapshot& snap, const sim::Observation& obs) {
  return act(*snap.network, std::span<const double>(obs.values));
}

/// Log-softmax of raw network outputs, taken as action values in reward
/// units (output x kValueScale) at the given temperature.
inline Eigen::VectorXd log_action_distribution(const Eigen::VectorXd& q, double temperature) {
  const Eigen::VectorXd z = q * (kValueScale / temperature);
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return (z.array() - lse).matrix();
}

inline Eigen::VectorXd action_distribution(const QNetwork& net, std::span<const double> obs, double temperature = 1.0) {
  return log_action_distribution(net.forward(Eigen::MatrixXd(encode(obs))).col(0), temperature).array().exp();
}

inline Eigen::VectorXd action_distribution(const PolicySnapshot& snap, const sim::Observation& obs,
                                           double temperature = 1.0) {
  return action_distribution(*snap.network, std::span<const double>(obs.values), temperature);
}

/// Policy adaptor for the simulator.
inline sim::ActionPolicy as_policy(std::shared_ptr<const QNetwork> net) {
  return [net = std::move(net)](const sim::Observation& obs) { return act(*net, std::span<const double>(obs.values)); };
}

// ---------------------------------------------------------------------------
// Snapshot file, all integers and floats little-endian:
//   char[8]  magic "DVDSNAP1"
//   u32      format version (1)
//   u32      layer count L (4), then u32 x L layer sizes (201, 64, 64, 9)
//   u32      session id
//   u64      training step
//   f64      driving score (NaN when not evaluated)
//   u32      tag length, then tag bytes
//   u64      parameter count, then f64 x count in network order
//            (W1 row-major, b1, W2, b2, W3, b3)
// ---------------------------------------------------------------------------

inline constexpr char kSnapshotMagic[8] = {'D', 'V', 'D', 'S', 'N', 'A', 'P', '1'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    std::memcpy(&bits, &value, 8);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error(ErrorCode::kCorrupt, "snapshot file truncated");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
      T v;
      std::memcpy(&v, &bits, 8);
      return v;
    } else {
      return static_cast<T>(bits);
    }
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::kCorrupt, "snapshot file truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize(const PolicySnapshot& snap) {
  std::string out(kSnapshotMagic, sizeof(kSnapshotMagic));
  detail::put_le<std::uint32_t>(out, kSnapshotVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kLayerSizes.size()));
  for (int s : kLayerSizes) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(snap.session_id));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(snap.training_step));
  detail::put_le<double>(out, snap.driving_score);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(snap.tag.size()));
  out += snap.tag;
  const Eigen::VectorXd& p = snap.network->parameters();
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) detail::put_le<double>(out, p[i]);
  return out;
}

inline PolicySnapshot deserialize(std::string_view bytes) {
  detail::Reader r(bytes);
  if (r.take(sizeof(kSnapshotMagic)) != std::string_view(kSnapshotMagic, sizeof(kSnapshotMagic)))
    throw Error(ErrorCode::kCorrupt, "not a snapshot file (bad magic)");
  if (r.get<std::uint32_t>() != kSnapshotVersion) throw Error(ErrorCode::kCorrupt, "unsupported snapshot version");
  const auto layers = r.get<std::uint32_t>();
  if (layers != kLayerSizes.size()) throw Error(ErrorCode::kCorrupt, "snapshot layer count mismatch");
  for (int expected : kLayerSizes)
    if (r.get<std::uint32_t>() != static_cast<std::uint32_t>(expected))
      throw Error(ErrorCode::kCorrupt, "snapshot layer sizes do not match the 201 -> 9 network");
  PolicySnapshot snap;
  snap.session_id = r.get<std::uint32_t>();
  snap.training_step = static_cast<std::int64_t>(r.get<std::uint64_t>());
  snap.driving_score = r.get<double>();
  snap.tag = std::string(r.take(r.get<std::uint32_t>()));
  const auto count = r.get<std::uint64_t>();
  if (count != QNetwork::parameter_count()) throw Error(ErrorCode::kCorrupt, "snapshot parameter count mismatch");
  auto net = std::make_shared<QNetwork>();
  for (std::uint64_t i = 0; i < count; ++i) net->parameters()[static_cast<Eigen::Index>(i)] = r.get<double>();
  if (!r.at_end()) throw Error(ErrorCode::kCorrupt, "trailing bytes after snapshot parameters");
  snap.network = std::move(net);
  return snap;
}

inline void save_snapshot(const PolicySnapshot& snap, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  const std::string bytes = serialize(snap);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline PolicySnapshot load_snapshot(const std::string& path) { return deserialize(read_file_bytes(path)); }

/// Content hash of the parameters and provenance; the driving score is left
/// out so that scoring a snapshot does not change its key.
inline std::string snapshot_hash(const PolicySnapshot& snap) {
  PolicySnapshot unscored = snap;
  unscored.driving_score = std::numeric_limits<double>::quiet_NaN();
  return text::hex64(text::fnv1a(serialize(unscored)));
}

}  // namespace divdrive::learning
