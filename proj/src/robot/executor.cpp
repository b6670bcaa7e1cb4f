#include "bimtwin/robot/executor.hpp"

#include <algorithm>

namespace bimtwin::robot {

namespace {

// Bisection resolution for the release drop.
constexpr double kDropTolerance = 1e-7;
// Extra fall allowed below the nominal drop before giving up on support.
constexpr double kDropMargin = 0.05;

double segment_length(const Posed& a, const Posed& b, double rotation_radius) {
  return (b.position - a.position).norm() +
         RigidTransformd::angular_distance(a.orientation, b.orientation) * rotation_radius;
}

struct FlatScene {
  std::vector<Obbd> boxes;
  std::vector<const bim::SceneBody*> owner;
};

FlatScene flatten(const std::vector<bim::SceneBody>& scene, const std::string& skip_source,
                  std::span<const Obbd> item = {}) {
  FlatScene f;
  for (const auto& body : scene) {
    if (!skip_source.empty() && body.source_id == skip_source) continue;
    if (!item.empty() && supports(body, item)) continue;
    for (const auto& b : body.boxes) {
      f.boxes.push_back(b);
      f.owner.push_back(&body);
    }
  }
  return f;
}

std::vector<Obbd> placed(std::span<const Obbd> boxes, const RigidTransformd& X) {
  std::vector<Obbd> out;
  for (const auto& b : boxes) out.push_back(b.transformed(X));
  return out;
}

}  // namespace

std::vector<bim::SceneBody> true_scene(const perception::GroundTruthWorld& world,
                                       const bim::BimRepository& repo) {
  std::vector<bim::SceneBody> out;
  for (const auto& [id, pose] : world.true_poses) {
    const bim::BimObject* o = repo.find(id);
    if (o == nullptr) continue;
    if (o->layer == bim::Layer::VirtualCollision) continue;
    bim::SceneBody body{id, id, o->layer, o->workpiece_type,
                        placed(o->geometry, RigidTransformd(pose))};
    out.push_back(std::move(body));
  }
  for (const auto& [id, state] : world.true_stacks) {
    const bim::MaterialStack* s = repo.find_stack(id);
    if (s == nullptr) continue;
    for (int k = 0; k < state.quantity; ++k) {
      Posed p = state.base_pose;
      p.position.z() += k * s->item_vertical_pitch;
      out.push_back(bim::SceneBody{bim::stack_item_id(id, k), id, bim::Layer::Materials,
                                   s->workpiece_type,
                                   placed(s->item_geometry, RigidTransformd(p))});
    }
  }
  return out;
}

RigidTransformd grasp_in_hand(const Posed& end_effector, const Posed& true_item,
                              const Posed& grip, const GraspCompensation& compensation) {
  const RigidTransformd actual = RigidTransformd(end_effector).inverse() * RigidTransformd(true_item);
  const RigidTransformd nominal = RigidTransformd(grip).inverse();
  Vector3d t = actual.translation();
  for (int a = 0; a < 3; ++a) {
    if (compensation.axes[a]) t[a] = nominal.translation()[a];
  }
  return RigidTransformd(compensation.rotation ? nominal.rotation() : actual.rotation(), t);
}

Executor::Executor(MotionPlan plan, const WorkCell& cell, perception::GroundTruthWorld world,
                   const bim::BimRepository& repo)
    : plan_(std::move(plan)), cell_(cell), world_(std::move(world)) {
  if (plan_.waypoints.size() < 2) throw PlanningError("plan has fewer than two waypoints");
  cumulative_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < plan_.waypoints.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + segment_length(plan_.waypoints[i],
                                                              plan_.waypoints[i + 1],
                                                              cell_.rotation_radius));
  }
  stop_at_ = cumulative_.back();
  in_hand_ = RigidTransformd(plan_.request.grip).inverse();
  resolve_outcome(repo);
  state_.end_effector = plan_.waypoints.front();
  state_.mode = Mode::Moving;
}

void Executor::resolve_outcome(const bim::BimRepository& repo) {
  perception::GroundTruthWorld w = world_;
  const auto& req = plan_.request;
  const bim::MaterialStack* stack = repo.find_stack(req.source_stack);

  std::vector<Obbd> true_item_boxes;  // picked item at rest, for the pick allowance
  auto sweep = [&](std::size_t seg, const std::vector<Obbd>& payload_in_ee,
                   bool allow_stack) -> bool {
    const auto scene = true_scene(w, repo);
    const FlatScene flat =
        allow_stack ? flatten(scene, req.source_stack, true_item_boxes) : flatten(scene, {});
    std::vector<Obbd> body = cell_.gripper;
    const std::size_t gripper_boxes = body.size();
    body.insert(body.end(), payload_in_ee.begin(), payload_in_ee.end());
    if (body.empty() || flat.boxes.empty()) return false;
    const std::span<const Posed> path(plan_.waypoints.data() + seg, 2);
    const auto hit = swept_collides<double>(path, body, flat.boxes, cell_.contact_step);
    if (!hit) return false;
    const bim::SceneBody& obstacle = *flat.owner[hit->scene_index];
    contact_ = Contact{obstacle.id, obstacle.source_id, obstacle.workpiece_type, seg,
                       hit->fraction, hit->body_index >= gripper_boxes};
    stop_at_ = cumulative_[seg] + hit->fraction * (cumulative_[seg + 1] - cumulative_[seg]);
    return true;
  };

  const std::size_t n = plan_.waypoints.size() - 1;
  if (stack != nullptr && w.true_stacks.count(req.source_stack) &&
      w.true_stacks.at(req.source_stack).quantity > 0) {
    const auto& st = w.true_stacks.at(req.source_stack);
    Posed top = st.base_pose;
    top.position.z() += (st.quantity - 1) * stack->item_vertical_pitch;
    true_item_boxes = placed(req.payload_geometry, RigidTransformd(top));
  }
  std::vector<Obbd> payload;
  bool exact_grasp = true;
  for (std::size_t seg = 0; seg < n; ++seg) {
    if (seg == plan_.attach_index) {
      // The jaws close on the true top item.
      if (stack != nullptr && w.true_stacks.count(req.source_stack) &&
          w.true_stacks.at(req.source_stack).quantity > 0) {
        auto& st = w.true_stacks.at(req.source_stack);
        Posed true_item = st.base_pose;
        true_item.position.z() += (st.quantity - 1) * stack->item_vertical_pitch;
        exact_grasp = true_item == req.pick_item;
        if (!exact_grasp) {
          in_hand_ = grasp_in_hand(plan_.waypoints[plan_.attach_index], true_item, req.grip,
                                   cell_.compensation);
        }
        --st.quantity;
      }
      payload = placed(req.payload_geometry, in_hand_);
    }
    if (seg == plan_.detach_index) {
      Posed item;
      if (exact_grasp) {
        item = req.place_item;
        item.position.z() = req.place_item.position.z() + cell_.drop_height;
      } else {
        item = (RigidTransformd(plan_.waypoints[plan_.detach_index]) * in_hand_).pose();
      }
      if (cell_.drop_height > 0) {
        const auto scene = true_scene(w, repo);
        const FlatScene flat = flatten(scene, std::string());
        auto touches = [&](double fall) {
          const RigidTransformd X(translated(item, Vector3d(0, 0, -fall)));
          for (const auto& b : req.payload_geometry) {
            const Obbd wb = b.transformed(X);
            for (const auto& s : flat.boxes) {
              if (obb_intersects(wb, s)) return true;
            }
          }
          return false;
        };
        const double max_fall = cell_.drop_height + kDropMargin;
        double lo = 0.0, hi = -1.0;
        if (touches(0.0)) {
          hi = 0.0;
        } else {
          for (double f = cell_.contact_step; f <= max_fall + 1e-12; f += cell_.contact_step) {
            if (touches(f)) {
              hi = f;
              break;
            }
            lo = f;
          }
        }
        if (hi < 0) {
          item = translated(item, Vector3d(0, 0, -max_fall));
        } else {
          while (hi - lo > kDropTolerance) {
            const double mid = 0.5 * (lo + hi);
            (touches(mid) ? hi : lo) = mid;
          }
          item = translated(item, Vector3d(0, 0, -hi));
        }
      }
      achieved_ = item;
      w.true_poses[req.target_id] = item;
      payload.clear();
    }
    const bool allow_stack = seg + 1 == plan_.attach_index || seg == plan_.attach_index;
    if (sweep(seg, payload, allow_stack)) {
      if (!payload.empty()) {
        // The item stays where the contact happened.
        std::size_t s_idx = 0;
        const Posed ee = pose_at(stop_at_, &s_idx);
        w.true_poses[req.target_id] = (RigidTransformd(ee) * in_hand_).pose();
      }
      break;
    }
  }
  final_world_ = std::move(w);
}

Posed Executor::pose_at(double s, std::size_t* segment) const {
  const std::size_t n = plan_.waypoints.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (s <= cumulative_[i + 1]) {
      *segment = i;
      if (s == cumulative_[i + 1]) return plan_.waypoints[i + 1];
      const double len = cumulative_[i + 1] - cumulative_[i];
      const double t = len > 0 ? (s - cumulative_[i]) / len : 1.0;
      return interpolate(plan_.waypoints[i], plan_.waypoints[i + 1], t);
    }
  }
  *segment = n - 1;
  return plan_.waypoints.back();
}

bool Executor::step() {
  if (finished_) return false;
  if (state_.mode == Mode::SafetyHold) return true;
  ++ticks_;
  state_.time += cell_.tick;
  s_ = std::min(stop_at_, s_ + cell_.speed() * cell_.tick);
  std::size_t seg = 0;
  state_.end_effector = pose_at(s_, &seg);
  state_.waypoint_index = seg;

  const bool attached = s_ >= cumulative_[plan_.attach_index] &&
                        (s_ < cumulative_[plan_.detach_index] ||
                         (contact_ && stop_at_ < cumulative_[plan_.detach_index]));
  if (attached) {
    state_.gripper = Gripper::Closed;
    state_.payload = Payload{plan_.request.target_id, plan_.request.payload_geometry, in_hand_};
  } else {
    state_.gripper = Gripper::Open;
    state_.payload.reset();
  }

  if (s_ >= stop_at_) {
    finished_ = true;
    state_.mode = Mode::Idle;
    world_ = final_world_;
    return false;
  }
  return true;
}

std::string Executor::interrupt() {
  if (finished_ || state_.mode != Mode::Moving) return {};
  state_.mode = Mode::SafetyHold;
  token_ = "hold-" + std::to_string(++holds_) + "-" + plan_.plan_id;
  return token_;
}

bool Executor::resume(const std::string& token) {
  if (state_.mode != Mode::SafetyHold || token.empty() || token != token_) return false;
  token_.clear();
  state_.mode = Mode::Moving;
  return true;
}

ExecutionReport Executor::report() const {
  ExecutionReport r;
  r.completed = finished_ && !contact_;
  if (finished_) {
    r.contact = contact_;
    r.achieved_place = contact_ ? std::nullopt : achieved_;
  }
  r.final_end_effector = state_.end_effector;
  r.robot_seconds = state_.time;
  r.ticks = ticks_;
  return r;
}

}  // namespace bimtwin::robot
