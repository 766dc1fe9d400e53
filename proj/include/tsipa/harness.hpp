#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsipa/aoa_estimator.hpp"
#include "tsipa/pseudorange.hpp"
#include "tsipa/scene.hpp"
#include "tsipa/tis_locator.hpp"
#include "tsipa/user_locator.hpp"

namespace tsipa {

/// How stage 2 produces rays: true direction plus the scene's ambiguity
/// model, or the full dictionary search on synthesized signals.
enum class AoaMode { kAmbiguity, kDictionary };

const char* to_string(AoaMode m);
AoaMode aoa_mode_from(const std::string& s);

struct PipelineOptions {
  TisLocatorOptions tis;
  UserLocatorOptions user;
  AoaMode aoa_mode = AoaMode::kAmbiguity;
  double dictionary_step_deg = 1.0;
};

/// Stages 1 and 2 for one trial; shared by every optimizer.
struct FrontEnd {
  std::vector<TisFix> tis_fixes;
  std::vector<RayEstimate> rays;
};

struct TsipaResult {
  std::vector<TisFix> tis_fixes;
  std::vector<RayEstimate> rays;
  UserFix user_fix;
};

/// Stage 1 on observations drawn from derive_seed(seed, 1) and stage 2 with
/// per-TIS seeds from derive_seed(seed, 2). Errors carry "stage1"/"stage2".
FrontEnd run_front_end(const Scene& scene, RangeMethod method, std::uint64_t seed,
                       const PipelineOptions& options = {});

/// Stage 3 with the error against the scene's user filled in. Errors carry "stage3".
UserFix run_back_end(const Scene& scene, const FrontEnd& front, Optimizer optimizer,
                     const PipelineOptions& options = {});

TsipaResult run_tsipa_once(const Scene& scene, RangeMethod method, Optimizer optimizer,
                           std::uint64_t seed, const PipelineOptions& options = {});

/// Second-time positioning: rays are re-anchored on the stored TIS fixes
/// (matched by id) and only stage 3 runs. Throws kPrecondition for an
/// unconverged or missing stored fix.
UserFix run_repeat_fix(std::span<const TisFix> stored_fixes,
                       std::span<const RayEstimate> fresh_rays, Optimizer optimizer,
                       const UserLocatorOptions& options = {},
                       std::optional<Position3> truth = std::nullopt);

}  // namespace tsipa
