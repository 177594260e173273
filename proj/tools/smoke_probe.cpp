// Temporary build probe; replaced by the CLI.
#include <cstdio>
#include <random>

#include "stepstone/experiments.hpp"
#include "stepstone/miqp.hpp"
#include "stepstone/sim.hpp"
#include "stepstone/solution_check.hpp"

using namespace stepstone;

int main() {
  Scenario scenario = Scenario::defaults();
  scenario.seed = 3;
  scenario.field.seed = 3;
  const StoneField field = generate_field(scenario.field);
  std::printf("stones: %zu\n", field.stones.size());
  for (size_t i = 0; i < std::min<size_t>(6, field.stones.size()); ++i) {
    const auto c = field.stones[i].polygon.centroid();
    std::printf("  stone %zu at (%.2f, %.2f) area %.3f h=%.3f\n", i, c.x(),
                c.y(), field.stones[i].polygon.area(),
                field.stones[i].height);
  }

  StancePose stance;
  stance.position = Vec3(0.0, -0.15, 0.0);
  std::mt19937_64 rng(scenario.seed ^ 0x9e3779b97f4a7c15ull);

  HeightMap map(scenario.perception);
  std::vector<PointCloud> clouds;
  for (const auto& sensor : scenario.sensors)
    clouds.push_back(sense(field, stance, sensor, rng));
  clouds.push_back(sample_contact_patch(field, stance, 0.18, 0.02));
  std::printf("cloud sizes: %zu %zu %zu\n", clouds[0].points.size(),
              clouds[1].points.size(), clouds[2].points.size());
  update(map, clouds, stance, scenario.sensor_model, scenario.perception);
  std::printf("observed cells: %d\n", map.observed_count());

  const std::vector<ConvexRegion> regions =
      extract_regions(map, scenario.regions);
  std::printf("regions: %zu\n", regions.size());
  for (const auto& r : regions) {
    const auto c = r.vertices.centroid();
    std::printf("  region %d at (%.2f, %.2f) area %.4f z=%.3f contains0=%d\n",
                r.id, c.x(), c.y(), r.vertices.area(), r.z_mean,
                r.contains(Vec2::Zero(), 1e-9) ? 1 : 0);
  }

  int stance_id = -1;
  for (const auto& r : regions)
    if (r.contains(Vec2::Zero(), 1e-9)) {
      stance_id = r.id;
      break;
    }
  std::printf("stance region id: %d\n", stance_id);

  PlannerConfig cfg = scenario.planner;
  cfg.z_goal = Vec2(scenario.goal_x - 0.0, 0.15);
  DcmState state;
  state.stance_side = StanceSide::right;
  state.t_elapsed = 0.0;
  state.T_current = cfg.T_nom;
  const Vec2 xi_meas(0.0, 0.15);

  std::vector<ConvexRegion> selected =
      select_regions(regions, stance_id, cfg.z_goal, 0.0, cfg.max_regions,
                     scenario.regions);
  std::printf("selected: %zu\n", selected.size());
  const PlannerSolution sol = replan(state, selected, cfg, xi_meas);
  std::printf("plan status=%d sigma1=%.3f obj=%.3f nodes=%ld\n",
              static_cast<int>(sol.status), sol.sigma1, sol.objective,
              sol.stats.nodes);
  if (sol.feasible())
    for (const auto& p : sol.footholds)
      std::printf("  foothold (%.3f, %.3f)\n", p.x(), p.y());
  return 0;
}
