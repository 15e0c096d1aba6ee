#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "relsym/errors.hpp"
#include "relsym/kvio.hpp"
#include "relsym/rng.hpp"
#include "relsym/sim.hpp"

namespace relsym {

// ---------------------------------------------------------------------------
// On-disk dataset format (version 1)
//
// One record per line, space-separated tokens, doubles printed with %.17g
// (bit-exact round trip):
//
//   <n> <a0> .. <a5> <n*6 feature values, row-major> <n*6 effect values>
//
// The leading object count prefixes the record length. The action is a pair
// of one-hot triples (grasp offset slot, release offset slot) over
// {-7.5, 0, +7.5}. Feature rows are [is_short, is_long, dx, dy, dz,
// is_target] in the grasped block's frame; the grasped row has pose (0,0,0).
// A sidecar "<variant>.manifest" carries counts, seed and format versions.
// ---------------------------------------------------------------------------

constexpr int kDatasetFormatVersion = 1;

struct SampleRecord {
    std::vector<std::array<double, 6>> features;
    std::array<int, 6> action{}; // one-hot grasp-offset triple + release-offset triple
    std::vector<std::array<double, 6>> effects;

    std::size_t n() const { return features.size(); }
};

struct DatasetManifest {
    std::string variant;
    std::size_t total = 0;
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    std::uint64_t seed = 0;
    std::string simulator = kSimulatorVersion;
    int format_version = kDatasetFormatVersion;
};

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

inline bool is_fixed_variant(const std::string& v) {
    return v == "2obj" || v == "3obj" || v == "4obj";
}

inline std::size_t variant_object_count(const std::string& v) {
    if (v == "2obj") return 2;
    if (v == "3obj") return 3;
    if (v == "4obj") return 4;
    throw DataError("unknown fixed variant: " + v);
}

/// Desk-scale default sample counts (a tenth of the full-scale collection).
inline std::size_t default_variant_count(const std::string& v) {
    if (v == "2obj") return 12000;
    if (v == "3obj") return 18000;
    if (v == "4obj") return 24000;
    if (v == "mixed") return 54000;
    throw DataError("unknown variant: " + v);
}

// ---------------------------------------------------------------------------
// Record construction and validation
// ---------------------------------------------------------------------------

inline std::array<int, 6> action_vector(const ActionSpec& a) {
    std::array<int, 6> v{};
    v[offset_slot(a.grasp_offset)] = 1;
    v[3 + offset_slot(a.release_offset)] = 1;
    return v;
}

inline void validate_record(const SampleRecord& r) {
    if (r.features.empty() || r.features.size() != r.effects.size())
        throw DataError("record: feature/effect row counts disagree");
    int g = 0, rel = 0;
    for (int i = 0; i < 3; ++i) g += r.action[i];
    for (int i = 3; i < 6; ++i) rel += r.action[i];
    if (g != 1 || rel != 1) throw DataError("record: action must be a one-hot pair");
    std::size_t zero_pose = 0, targets = 0;
    for (const auto& row : r.features) {
        if (row[2] == 0.0 && row[3] == 0.0 && row[4] == 0.0) ++zero_pose;
        if (row[5] == 1.0) ++targets;
        if (row[0] + row[1] != 1.0) throw DataError("record: kind one-hot malformed");
    }
    if (zero_pose != 1) throw DataError("record: expected exactly one zero-pose (grasped) row");
    if (targets != 1) throw DataError("record: expected exactly one target row");
}

inline std::string encode_record(const SampleRecord& r) {
    std::string line = std::to_string(r.n());
    for (int a : r.action) line += " " + std::to_string(a);
    for (const auto& row : r.features)
        for (double v : row) line += " " + format_double(v);
    for (const auto& row : r.effects)
        for (double v : row) line += " " + format_double(v);
    return line;
}

inline SampleRecord decode_record(const std::string& line) {
    std::istringstream in(line);
    std::string tok;
    auto next = [&]() -> std::string {
        if (!(in >> tok)) throw DataError("record truncated: '" + line + "'");
        return tok;
    };
    SampleRecord r;
    const std::size_t n = parse_u64(next());
    for (int i = 0; i < 6; ++i) r.action[i] = static_cast<int>(parse_u64(next()));
    r.features.resize(n);
    r.effects.resize(n);
    for (auto& row : r.features)
        for (double& v : row) v = parse_double(next());
    for (auto& row : r.effects)
        for (double& v : row) v = parse_double(next());
    if (in >> tok) throw DataError("trailing tokens in record: '" + line + "'");
    validate_record(r);
    return r;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// One interaction episode: fresh scene, uniformly random valid action, one
/// execution. Deterministic given the episode rng.
inline SampleRecord sample_episode(std::size_t n_objects, Rng& rng) {
    WorldState scene = spawn_scene(n_objects, rng);
    ActionSpec action = random_action(n_objects, rng);
    auto [next, eff] = execute(scene, action);
    SampleRecord r;
    r.features = relative_features(scene, action);
    r.action = action_vector(action);
    r.effects = eff.per_object;
    return r;
}

inline std::vector<SampleRecord> generate_fixed(const std::string& variant, std::size_t count,
                                                std::uint64_t seed) {
    const std::size_t n = variant_object_count(variant);
    std::vector<SampleRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = Rng::stream(seed, variant + ".episode." + std::to_string(i));
        out.push_back(sample_episode(n, rng));
    }
    return out;
}

/// The mixed variant is literally the concatenation of the three fixed-n
/// variants (2:3:4 count ratio), generated from the same master seed.
inline std::vector<SampleRecord> generate(const std::string& variant, std::size_t count,
                                          std::uint64_t seed) {
    if (count == 0) throw DataError("generate: count must be positive");
    if (is_fixed_variant(variant)) return generate_fixed(variant, count, seed);
    if (variant != "mixed") throw DataError("unknown variant: " + variant);
    const std::size_t c2 = count * 2 / 9, c3 = count * 3 / 9;
    const std::size_t c4 = count - c2 - c3;
    std::vector<SampleRecord> out = generate_fixed("2obj", c2, seed);
    std::vector<SampleRecord> r3 = generate_fixed("3obj", c3, seed);
    std::vector<SampleRecord> r4 = generate_fixed("4obj", c4, seed);
    out.insert(out.end(), r3.begin(), r3.end());
    out.insert(out.end(), r4.begin(), r4.end());
    return out;
}

// ---------------------------------------------------------------------------
// Splits and batches
// ---------------------------------------------------------------------------

struct DatasetSplits {
    std::vector<SampleRecord> train, val, test;
};

/// Deterministic 0.8/0.1/0.1 partition via a seeded shuffle.
inline DatasetSplits split(const std::vector<SampleRecord>& records, std::uint64_t seed) {
    const std::size_t n = records.size();
    if (n < 10) throw DataError("refusing to split " + std::to_string(n) +
                                " records: need at least 10 for nonempty splits");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(seed, "split");
    shuffle(order, rng);
    const std::size_t n_train = n * 8 / 10;
    const std::size_t n_val = n / 10;
    DatasetSplits s;
    for (std::size_t i = 0; i < n; ++i) {
        const SampleRecord& r = records[order[i]];
        if (i < n_train)
            s.train.push_back(r);
        else if (i < n_train + n_val)
            s.val.push_back(r);
        else
            s.test.push_back(r);
    }
    return s;
}

/// Records grouped for a forward pass, padded to the widest record in the
/// group. Padded object rows are zero and masked out of losses and metrics.
struct Batch {
    std::size_t samples = 0;
    std::size_t max_objects = 0;
    std::vector<double> features; // (samples*max_objects) x 6
    std::vector<double> actions;  // samples x 6
    std::vector<double> effects;  // (samples*max_objects) x 6
    std::vector<std::uint8_t> mask; // samples*max_objects
    std::vector<std::size_t> object_counts;

    std::size_t rows() const { return samples * max_objects; }
};

inline Batch make_batch(const std::vector<SampleRecord>& records, std::size_t pad_to = 0) {
    if (records.empty()) throw ContractError("make_batch: empty record group");
    Batch b;
    b.samples = records.size();
    b.max_objects = pad_to;
    for (const auto& r : records) b.max_objects = std::max(b.max_objects, r.n());
    b.features.assign(b.rows() * 6, 0.0);
    b.actions.assign(b.samples * 6, 0.0);
    b.effects.assign(b.rows() * 6, 0.0);
    b.mask.assign(b.rows(), 0);
    for (std::size_t s = 0; s < b.samples; ++s) {
        const SampleRecord& r = records[s];
        if (pad_to && r.n() > pad_to) throw ContractError("make_batch: record wider than pad_to");
        b.object_counts.push_back(r.n());
        for (int j = 0; j < 6; ++j) b.actions[s * 6 + j] = r.action[j];
        for (std::size_t i = 0; i < r.n(); ++i) {
            const std::size_t row = s * b.max_objects + i;
            b.mask[row] = 1;
            for (int j = 0; j < 6; ++j) {
                b.features[row * 6 + j] = r.features[i][j];
                b.effects[row * 6 + j] = r.effects[i][j];
            }
        }
    }
    return b;
}

/// Deterministic shuffled batching; the final short group is kept.
inline std::vector<Batch> load_batches(const std::vector<SampleRecord>& records,
                                       std::size_t batch_size, std::uint64_t seed) {
    if (batch_size == 0) throw ContractError("load_batches: batch_size must be positive");
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(seed, "batches");
    shuffle(order, rng);
    std::vector<Batch> out;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        std::vector<SampleRecord> group;
        group.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) group.push_back(records[order[i]]);
        out.push_back(make_batch(group));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void save_records(const std::string& path, const std::vector<SampleRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write dataset file " + path);
    for (const auto& r : records) out << encode_record(r) << "\n";
    if (!out) throw DataError("write failed for " + path);
}

inline std::vector<SampleRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path);
    std::vector<SampleRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(decode_record(line));
    }
    return out;
}

inline void write_manifest(const std::string& path, const DatasetManifest& m) {
    write_kv_file(path, {{"format_version", std::to_string(m.format_version)},
                         {"variant", m.variant},
                         {"total", std::to_string(m.total)},
                         {"train", std::to_string(m.train)},
                         {"val", std::to_string(m.val)},
                         {"test", std::to_string(m.test)},
                         {"seed", std::to_string(m.seed)},
                         {"simulator", m.simulator}});
}

inline DatasetManifest read_manifest(const std::string& path) {
    auto kv = read_kv_file(path);
    auto need = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError(path + ": missing key '" + key + "'");
        return it->second;
    };
    DatasetManifest m;
    m.format_version = static_cast<int>(parse_u64(need("format_version")));
    if (m.format_version != kDatasetFormatVersion)
        throw DataError(path + ": unsupported format version " + std::to_string(m.format_version));
    m.variant = need("variant");
    m.total = parse_u64(need("total"));
    m.train = parse_u64(need("train"));
    m.val = parse_u64(need("val"));
    m.test = parse_u64(need("test"));
    m.seed = parse_u64(need("seed"));
    m.simulator = need("simulator");
    return m;
}

/// gen-data entry point: dataset file plus manifest sidecar under `dir`.
inline DatasetManifest generate_files(const std::string& dir, const std::string& variant,
                                      std::size_t count, std::uint64_t seed) {
    auto records = generate(variant, count, seed);
    auto parts = split(records, seed);
    DatasetManifest m;
    m.variant = variant;
    m.total = records.size();
    m.train = parts.train.size();
    m.val = parts.val.size();
    m.test = parts.test.size();
    m.seed = seed;
    save_records(dir + "/" + variant + ".ds", records);
    write_manifest(dir + "/" + variant + ".manifest", m);
    return m;
}

/// Loads `<dir>/<variant>.ds` and re-derives the manifest's split with the
/// manifest seed, so every consumer sees the same partition.
inline std::pair<DatasetSplits, DatasetManifest> load_split_dataset(const std::string& dir,
                                                                    const std::string& variant) {
    DatasetManifest m = read_manifest(dir + "/" + variant + ".manifest");
    auto records = load_records(dir + "/" + variant + ".ds");
    if (records.size() != m.total)
        throw DataError("dataset/manifest disagree on record count for " + variant);
    return {split(records, m.seed), m};
}

// ---------------------------------------------------------------------------
// Replay oracle
// ---------------------------------------------------------------------------

/// Reconstructs the absolute interaction from a record. The simulator is
/// translation invariant in x/y, so the grasped block anchors the frame at
/// the origin; the lowest block of any settled scene rests at base 0, which
/// pins the absolute heights.
inline std::pair<WorldState, ActionSpec> reconstruct_interaction(const SampleRecord& r) {
    double min_rel_z = 0.0;
    std::size_t grasp = r.n(), target = r.n();
    for (std::size_t i = 0; i < r.n(); ++i) {
        min_rel_z = std::min(min_rel_z, r.features[i][4]);
        if (r.features[i][2] == 0.0 && r.features[i][3] == 0.0 && r.features[i][4] == 0.0) grasp = i;
        if (r.features[i][5] == 1.0) target = i;
    }
    if (grasp >= r.n() || target >= r.n()) throw DataError("record misses grasp/target marks");
    const double zg = kBlockHeight / 2.0 - min_rel_z;
    WorldState s;
    for (std::size_t i = 0; i < r.n(); ++i) {
        PlacedBlock b;
        b.spec.kind = r.features[i][0] == 1.0 ? BlockKind::Short : BlockKind::Long;
        b.x = r.features[i][2];
        b.y = r.features[i][3];
        b.z = r.features[i][4] + zg;
        s.blocks.push_back(b);
    }
    ActionSpec a;
    a.grasp_index = grasp;
    a.target_index = target;
    for (int j = 0; j < 3; ++j) {
        if (r.action[j]) a.grasp_offset = kActionOffsets[j];
        if (r.action[3 + j]) a.release_offset = kActionOffsets[j];
    }
    return {s, a};
}

/// Re-derives the stored effects by replaying the reconstructed interaction.
inline std::vector<std::array<double, 6>> replay_effects(const SampleRecord& r) {
    auto [world, action] = reconstruct_interaction(r);
    return execute(world, action).second.per_object;
}

} // namespace relsym
