#pragma once

#include <Eigen/Core>

#include <vector>

namespace recode {

using Vec2 = Eigen::Vector2d;

enum class Scenario { narrow_corridor, connectivity, waypoint, sensor_coverage };

/// One communication edge as seen by the ego agent.
struct EdgeFeature {
  int neighbor_id = -1;
  Vec2 rel_position = Vec2::Zero();  // p_j - p_ego
  Vec2 rel_goal = Vec2::Zero();      // neighbor's goal displacement g_j - p_j
  double same_team = 1.0;            // +1 same team, -1 otherwise
};

/// Nearest face of an obstacle within sensing range, as a half-plane.
struct ObstacleFace {
  Vec2 normal = Vec2::UnitX();  // outward, pointing from the face toward the agent
  double clearance = 0.0;       // gap between the agent disc and the face
};

/// Local observation: own kinematic context plus edges to every neighbor
/// within communication range.
struct ObservationGraph {
  int agent_id = 0;
  Vec2 position = Vec2::Zero();
  Vec2 goal_displacement = Vec2::Zero();  // g - p (region center for corridor tasks)
  Eigen::Vector4d bounds_distances = Eigen::Vector4d::Zero();  // +x, -x, +y, -y walls
  std::vector<EdgeFeature> neighbor_edges;
  std::vector<ObstacleFace> obstacle_faces;
};

}  // namespace recode
