#include "tsipa/harness.hpp"

#include <algorithm>
#include <cctype>

#include "tsipa/errors.hpp"
#include "tsipa/random.hpp"

namespace tsipa {

namespace {

template <typename F>
auto tagged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

}  // namespace

const char* to_string(AoaMode m) {
  return m == AoaMode::kAmbiguity ? "ambiguity" : "dictionary";
}

AoaMode aoa_mode_from(const std::string& s) {
  if (s == "ambiguity") return AoaMode::kAmbiguity;
  if (s == "dictionary") return AoaMode::kDictionary;
  throw Error(ErrorCode::kDomain, "unknown AoA mode '" + s + "'");
}

FrontEnd run_front_end(const Scene& scene, RangeMethod method, std::uint64_t seed,
                       const PipelineOptions& options) {
  require_valid(scene);
  FrontEnd front;
  front.tis_fixes = tagged("stage1", [&] {
    const PseudorangeSet set = build_observation_set(scene, method, derive_seed(seed, 1));
    std::vector<TisFix> fixes;
    for (auto& outcome : locate_all_tis(set, method, scene.satellites, options.tis)) {
      if (!outcome.fix) {
        throw Error(ErrorCode::kDegenerateInput,
                    "TIS " + std::to_string(outcome.tis_id) + ": " + outcome.error);
      }
      TisFix fix = *outcome.fix;
      fix.error_vs_truth_m = (fix.position_est - scene.tis(fix.tis_id).position).norm();
      fixes.push_back(fix);
    }
    return fixes;
  });

  front.rays = tagged("stage2", [&] {
    const std::uint64_t stage_seed = derive_seed(seed, 2);
    const AngleGrid grid = options.aoa_mode == AoaMode::kDictionary
                               ? AngleGrid::degrees(options.dictionary_step_deg)
                               : AngleGrid{};
    std::vector<RayEstimate> rays;
    for (const auto& fix : front.tis_fixes) {
      const std::uint64_t s = derive_seed(stage_seed, static_cast<std::uint64_t>(fix.tis_id));
      rays.push_back(options.aoa_mode == AoaMode::kDictionary
                         ? ray_from_dictionary(scene, fix.tis_id, fix.position_est, grid, s)
                         : ray_from_ambiguity(scene, fix.tis_id, fix.position_est, s));
    }
    return rays;
  });
  return front;
}

UserFix run_back_end(const Scene& scene, const FrontEnd& front, Optimizer optimizer,
                     const PipelineOptions& options) {
  return tagged("stage3", [&] {
    UserFix fix = locate_user(front.rays, optimizer, options.user);
    fix.error_vs_truth_m = (fix.position_est - scene.user.position).norm();
    return fix;
  });
}

TsipaResult run_tsipa_once(const Scene& scene, RangeMethod method, Optimizer optimizer,
                           std::uint64_t seed, const PipelineOptions& options) {
  FrontEnd front = run_front_end(scene, method, seed, options);
  UserFix fix = run_back_end(scene, front, optimizer, options);
  return {std::move(front.tis_fixes), std::move(front.rays), fix};
}

UserFix run_repeat_fix(std::span<const TisFix> stored_fixes,
                       std::span<const RayEstimate> fresh_rays, Optimizer optimizer,
                       const UserLocatorOptions& options, std::optional<Position3> truth) {
  std::vector<RayEstimate> rays(fresh_rays.begin(), fresh_rays.end());
  for (auto& ray : rays) {
    const auto it = std::find_if(stored_fixes.begin(), stored_fixes.end(),
                                 [&](const TisFix& f) { return f.tis_id == ray.tis_id; });
    if (it == stored_fixes.end()) {
      throw Error(ErrorCode::kPrecondition,
                  "no stored fix for TIS " + std::to_string(ray.tis_id))
          .with_stage("stage3");
    }
    if (!it->converged) {
      throw Error(ErrorCode::kPrecondition,
                  "stored fix for TIS " + std::to_string(ray.tis_id) + " did not converge")
          .with_stage("stage3");
    }
    ray.origin = it->position_est;
  }
  return tagged("stage3", [&] {
    UserFix fix = locate_user(rays, optimizer, options);
    if (truth) fix.error_vs_truth_m = (fix.position_est - *truth).norm();
    return fix;
  });
}

}  // namespace tsipa
