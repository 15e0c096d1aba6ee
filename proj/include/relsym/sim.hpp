#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "relsym/errors.hpp"
#include "relsym/rng.hpp"

namespace relsym {

// Deterministic kinematic tabletop world. Blocks are axis-aligned boxes on an
// unbounded table at z = 0; there is no friction, toppling, or lateral push.
// Falling is a straight-down drop that stops on the highest top face whose
// footprint overlaps the falling block's footprint (the table otherwise).
// Center-over-face is the common case; the footprint-overlap rule also stops
// a wide block released beside a narrow one from clipping through its corner,
// which keeps worlds interpenetration-free.

enum class BlockKind { Short, Long };

constexpr double kBlockHeight = 5.0;   // cm
constexpr double kBlockWidth = 5.0;    // cm, y extent of both kinds
constexpr double kShortLength = 5.0;   // cm, x extent
constexpr double kLongLength = 20.0;   // cm, x extent
constexpr double kCarryClearance = 20.0; // cm above the table while carried
constexpr double kSpawnHalfExtent = 25.0;
constexpr double kMinSpawnSeparation = 15.0; // planar center distance
constexpr std::array<double, 3> kActionOffsets{-7.5, 0.0, +7.5};

constexpr const char* kSimulatorVersion = "kinematic-1";

struct BlockSpec {
    BlockKind kind = BlockKind::Short;
    double length_x() const { return kind == BlockKind::Long ? kLongLength : kShortLength; }
    double width_y() const { return kBlockWidth; }
    double height_z() const { return kBlockHeight; }
};

struct PlacedBlock {
    BlockSpec spec;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0; // center height

    double half_length() const { return spec.length_x() / 2.0; }
    double base() const { return z - kBlockHeight / 2.0; }
    double top() const { return z + kBlockHeight / 2.0; }
};

struct WorldState {
    std::vector<PlacedBlock> blocks;
    std::size_t size() const { return blocks.size(); }
};

struct ActionSpec {
    std::size_t grasp_index = 0;
    double grasp_offset = 0.0; // one of kActionOffsets
    std::size_t target_index = 0;
    double release_offset = 0.0;
};

/// Per object: (dx, dy, dz) at the pick phase followed by (dx, dy, dz) at the
/// release phase, in cm. All zeros for every object when the grasp fails.
struct EffectRecord {
    std::vector<std::array<double, 6>> per_object;
};

inline bool is_action_offset(double v) {
    return v == kActionOffsets[0] || v == kActionOffsets[1] || v == kActionOffsets[2];
}

inline std::size_t offset_slot(double v) {
    for (std::size_t i = 0; i < 3; ++i)
        if (kActionOffsets[i] == v) return i;
    throw ContractError("offset " + std::to_string(v) + " is not one of {-7.5, 0, +7.5}");
}

inline void validate_action(const WorldState& s, const ActionSpec& a) {
    if (a.grasp_index >= s.size() || a.target_index >= s.size())
        throw ContractError("action indices out of range");
    if (a.grasp_index == a.target_index)
        throw ContractError("target must differ from the grasped object");
    if (!is_action_offset(a.grasp_offset) || !is_action_offset(a.release_offset))
        throw ContractError("offsets must come from {-7.5, 0, +7.5}");
}

namespace simdetail {

inline bool footprints_overlap(const PlacedBlock& a, const PlacedBlock& b) {
    return std::fabs(a.x - b.x) < a.half_length() + b.half_length() &&
           std::fabs(a.y - b.y) < kBlockWidth;
}

inline bool point_in_footprint(const PlacedBlock& b, double px, double py) {
    return std::fabs(px - b.x) <= b.half_length() && std::fabs(py - b.y) <= kBlockWidth / 2.0;
}

inline bool volumes_interpenetrate(const PlacedBlock& a, const PlacedBlock& b, double eps = 1e-9) {
    const bool xy = std::fabs(a.x - b.x) < a.half_length() + b.half_length() - eps &&
                    std::fabs(a.y - b.y) < kBlockWidth - eps;
    const bool zz = std::max(a.base(), b.base()) < std::min(a.top(), b.top()) - eps;
    return xy && zz;
}

} // namespace simdetail

/// Drops every block (except an optional carried one) onto its support,
/// processing in ascending base order so supports are final before their
/// dependents fall. Idempotent.
inline WorldState settle_excluding(const WorldState& s, std::optional<std::size_t> carried) {
    WorldState out = s;
    std::vector<std::size_t> order;
    order.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!carried || *carried != i) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.blocks[a].base() < out.blocks[b].base();
    });
    std::vector<std::size_t> done;
    done.reserve(order.size());
    for (std::size_t idx : order) {
        double base = 0.0;
        for (std::size_t j : done)
            if (simdetail::footprints_overlap(out.blocks[idx], out.blocks[j]))
                base = std::max(base, out.blocks[j].top());
        out.blocks[idx].z = base + kBlockHeight / 2.0;
        done.push_back(idx);
    }
    return out;
}

inline WorldState settle(const WorldState& s) { return settle_excluding(s, std::nullopt); }

inline bool world_equal(const WorldState& a, const WorldState& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.blocks[i].spec.kind != b.blocks[i].spec.kind) return false;
        if (a.blocks[i].x != b.blocks[i].x || a.blocks[i].y != b.blocks[i].y ||
            a.blocks[i].z != b.blocks[i].z)
            return false;
    }
    return true;
}

/// 2 to 4 blocks, uniform random kinds, centers uniform over the spawn square
/// at base 0, pairwise planar separation >= 15 cm and no footprint overlap.
inline WorldState spawn_scene(std::size_t n, Rng& rng) {
    if (n < 2 || n > 4) throw ContractError("spawn_scene: object count must be 2..4");
    WorldState s;
    for (std::size_t i = 0; i < n; ++i) {
        PlacedBlock b;
        b.spec.kind = rng.uniform_index(2) == 0 ? BlockKind::Short : BlockKind::Long;
        b.z = kBlockHeight / 2.0;
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            b.x = rng.uniform(-kSpawnHalfExtent, kSpawnHalfExtent);
            b.y = rng.uniform(-kSpawnHalfExtent, kSpawnHalfExtent);
            placed = true;
            for (const auto& other : s.blocks) {
                const double dx = b.x - other.x, dy = b.y - other.y;
                if (dx * dx + dy * dy < kMinSpawnSeparation * kMinSpawnSeparation ||
                    simdetail::footprints_overlap(b, other)) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed) throw DataError("spawn_scene: gave up after 10000 placement attempts");
        s.blocks.push_back(b);
    }
    return s;
}

/// True iff the offset lies on the grasped block and no higher block's
/// footprint covers the grasp point.
inline bool grasp_success(const WorldState& s, std::size_t grasp_index, double grasp_offset) {
    const PlacedBlock& g = s.blocks[grasp_index];
    if (std::fabs(grasp_offset) > g.half_length()) return false;
    const double px = g.x + grasp_offset, py = g.y;
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (j == grasp_index) continue;
        const PlacedBlock& b = s.blocks[j];
        if (b.z > g.z && simdetail::point_in_footprint(b, px, py)) return false;
    }
    return true;
}

/// Pick-and-place. The pick lifts the grasped block straight up to carry
/// height and re-settles blocks that lost support; the transport to the
/// release pose is excluded from effects; the release drops the carried block
/// onto the target column without displacing anything else.
inline std::pair<WorldState, EffectRecord> execute(const WorldState& state, const ActionSpec& a) {
    validate_action(state, a);
    if (!world_equal(state, settle(state)))
        throw ContractError("execute requires a settled world state");

    const std::size_t n = state.size();
    EffectRecord eff;
    eff.per_object.assign(n, {0, 0, 0, 0, 0, 0});
    if (!grasp_success(state, a.grasp_index, a.grasp_offset)) return {state, eff};

    const double carry_z = kCarryClearance + kBlockHeight / 2.0;

    WorldState work = state;
    work.blocks[a.grasp_index].z = carry_z;
    work = settle_excluding(work, a.grasp_index);
    for (std::size_t i = 0; i < n; ++i) {
        eff.per_object[i][0] = work.blocks[i].x - state.blocks[i].x;
        eff.per_object[i][1] = work.blocks[i].y - state.blocks[i].y;
        eff.per_object[i][2] = work.blocks[i].z - state.blocks[i].z;
    }

    // Transport to the release pose (excluded from effects by definition).
    const PlacedBlock& target = work.blocks[a.target_index];
    const double rx = target.x + a.release_offset;
    const double ry = target.y;
    PlacedBlock& carried = work.blocks[a.grasp_index];
    carried.x = rx;
    carried.y = ry;
    carried.z = carry_z;

    double base = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == a.grasp_index) continue;
        if (simdetail::footprints_overlap(carried, work.blocks[j]))
            base = std::max(base, work.blocks[j].top());
    }
    carried.z = base + kBlockHeight / 2.0;
    eff.per_object[a.grasp_index][3] = carried.x - rx;
    eff.per_object[a.grasp_index][4] = carried.y - ry;
    eff.per_object[a.grasp_index][5] = carried.z - carry_z;
    return {work, eff};
}

/// Per-object rows [is_short, is_long, x-xg, y-yg, z-zg, is_target] in the
/// frame of the block about to be picked. Pure row arithmetic; usable on
/// predicted (possibly unphysical) states during rollouts.
inline std::vector<std::array<double, 6>> relative_features(const WorldState& s,
                                                            const ActionSpec& a) {
    validate_action(s, a);
    const PlacedBlock& g = s.blocks[a.grasp_index];
    std::vector<std::array<double, 6>> rows(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const PlacedBlock& b = s.blocks[i];
        rows[i] = {b.spec.kind == BlockKind::Short ? 1.0 : 0.0,
                   b.spec.kind == BlockKind::Long ? 1.0 : 0.0,
                   b.x - g.x,
                   b.y - g.y,
                   b.z - g.z,
                   i == a.target_index ? 1.0 : 0.0};
    }
    return rows;
}

/// Uniformly random valid action on an n-object scene.
inline ActionSpec random_action(std::size_t n, Rng& rng) {
    ActionSpec a;
    a.grasp_index = static_cast<std::size_t>(rng.uniform_index(n));
    a.grasp_offset = kActionOffsets[rng.uniform_index(3)];
    a.target_index = static_cast<std::size_t>(rng.uniform_index(n - 1));
    if (a.target_index >= a.grasp_index) ++a.target_index;
    a.release_offset = kActionOffsets[rng.uniform_index(3)];
    return a;
}

/// Debug dump, one block per line: kind x y z. Not a stability contract.
inline std::string dump_scene(const WorldState& s) {
    std::string out;
    char buf[128];
    for (const auto& b : s.blocks) {
        std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g\n",
                      b.spec.kind == BlockKind::Long ? "long" : "short", b.x, b.y, b.z);
        out += buf;
    }
    return out;
}

/// Empty string when all world invariants hold, else a description of the
/// first violation (support fixed point, non-penetration, base >= 0).
inline std::string invariant_violation(const WorldState& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.blocks[i].base() < -1e-9)
            return "block " + std::to_string(i) + " below the table";
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j)
            if (simdetail::volumes_interpenetrate(s.blocks[i], s.blocks[j]))
                return "blocks " + std::to_string(i) + " and " + std::to_string(j) +
                       " interpenetrate";
    if (!world_equal(s, settle(s))) return "world is not settled";
    return {};
}

} // namespace relsym
