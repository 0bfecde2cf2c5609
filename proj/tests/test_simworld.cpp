#include <doctest.h>

#include <cmath>

#include "toolplan/scene.hpp"
#include "toolplan/script/interp.hpp"
#include "toolplan/script/parser.hpp"
#include "toolplan/sim/world.hpp"

using namespace toolplan;
using namespace toolplan::sim;
using toolplan::script::SkillErrorKind;
using toolplan::script::SkillResult;

namespace {

const std::string kRoot = TOOLPLAN_SOURCE_DIR;

TaskSpec task(const std::string& stem) {
    return load_task_file(kRoot + "/tasks/" + stem + ".json");
}

SkillErrorKind kind_of(const SkillResult& r) {
    REQUIRE(r.is_error());
    return r.error->kind;
}

script::ExecutionTrace run_script(World& world, const std::string& source) {
    script::Program program = script::parse(source);
    return script::interpret(program, world);
}

// The golden scripts, kept in sync with fixtures/golden/*/full.json.
const char* kMilkScript = R"(hammer = get_position('hammer')
grip = hammer + [-0.08, 0.0, 0.0]
move_to_position([grip.x, grip.y, 0.22])
move_to_position(grip)
close_gripper()
move_to_position([grip.x, grip.y, 0.35])
move_to_position([0.55, 0.1, 0.35])
move_to_position([0.55, 0.1, 0.1])
move_to_position([0.25, 0.1, 0.1])
move_to_position([0.25, 0.1, 0.35])
move_to_position([0.1, -0.3, 0.35])
move_to_position([0.1, -0.3, 0.04])
open_gripper()
move_to_position([0.1, -0.3, 0.35])
milk = get_position('milk')
move_to_position([milk.x, milk.y, 0.35])
move_to_position(milk)
close_gripper()
)";

const char* kCanScript = R"(stick = get_position('stick')
grip = stick + [-0.18, 0.0, 0.0]
move_to_position([grip.x, grip.y, 0.25])
move_to_position(grip)
close_gripper()
move_to_position([grip.x, grip.y, 0.3])
move_to_position([0.5, 0.11, 0.3])
move_to_position([0.5, 0.11, 0.05])
move_to_position([0.5, -0.09, 0.05])
move_to_position([0.5, -0.09, 0.3])
move_to_position([0.1, 0.3, 0.3])
move_to_position([0.1, 0.3, 0.035])
open_gripper()
move_to_position([0.1, 0.3, 0.25])
scroll = get_position('scroll')
grip2 = scroll + [-0.22, 0.0, 0.0]
move_to_position([grip2.x, grip2.y, 0.25])
move_to_position(grip2)
close_gripper()
move_to_position([grip2.x - 0.35, grip2.y, grip2.z])
open_gripper()
move_to_position([-0.02, -0.15, 0.3])
can = get_position('can')
move_to_position([can.x, can.y, 0.3])
move_to_position(can)
close_gripper()
)";

const char* kButtonScript = R"(a = get_position('block_a')
b = get_position('block_b')
move_to_position([a.x, a.y, 0.3])
move_to_position(a)
close_gripper()
move_to_position([a.x, a.y, 0.3])
target = b + [-0.18, 0.0, 0.0]
move_to_position([target.x, target.y, 0.3])
move_to_position(target)
open_gripper()
move_to_position([target.x, target.y, 0.3])
grip = get_position('block_a')
move_to_position(grip)
close_gripper()
move_to_position([grip.x, grip.y, 0.3])
move_to_position([0.52, 0.0, 0.3])
move_to_position([0.52, 0.0, 0.02])
)";

const char* kTraverseScript = R"(board = get_position('surfboard')
push_to_position('surfboard', [0.05, 0.0, 0.625], 0.0)
walk_to_position([0.7, 0.0, 0.6])
)";

const char* kClimbScript = R"(box = get_position('small_box')
push_to_position('small_box', [0.4, 0.0, 0.125], 0.0)
walk_to_position([-0.2, 0.0, 0.0])
climb_to_position([1.5, 0.0, 0.55])
)";

const char* kCubeScript = R"(chair = get_position('chair')
push_to_position('chair', [0.55, 0.8, 0.2], 0.0)
walk_to_position([0.55, 0.0, 0.02])
)";

}  // namespace

TEST_CASE("get_position and get_size answer from the oracle") {
    World world = World::for_task(task("milk-reaching"));
    SkillResult r = world.get_position("hammer");
    CHECK(r.value->vec == Vec3{0.3, -0.3, 0.02});
    CHECK(kind_of(world.get_position("ghost")) == SkillErrorKind::unknown_object);
    SkillResult s = world.get_size("milk");
    CHECK(s.value->vec.x == doctest::Approx(0.08));
    CHECK(s.value->vec.y == doctest::Approx(0.08));
    CHECK(s.value->vec.z == doctest::Approx(0.2));
}

TEST_CASE("get_size reports world-frame extents of a rotated box") {
    SceneConfig scene = task("milk-reaching").scene;
    scene.objects[0].name = "board";
    scene.objects[0].size = {0.3, 0.2, 0.1};
    scene.objects[0].yaw = M_PI / 2;
    scene.objects[0].position = {0.3, 0.3, 0.05};
    World world(scene);
    Vec3 extent = world.get_size("board").value->vec;
    CHECK(extent.x == doctest::Approx(0.2));
    CHECK(extent.y == doctest::Approx(0.3));
    CHECK(extent.z == doctest::Approx(0.1));
}

TEST_CASE("move_to_position enforces the workspace sphere") {
    World world = World::for_task(task("milk-reaching"));
    SkillResult far = world.move_to_position({0.0, 0.0, 0.81});  // 0.61 from center
    CHECK(kind_of(far) == SkillErrorKind::out_of_workspace);
    CHECK(far.error->values[0].second == doctest::Approx(0.61));
    SkillResult ok = world.move_to_position({0.3, 0.0, 0.2});
    CHECK(!ok.is_error());
    CHECK(world.robot().position == Vec3{0.3, 0.0, 0.2});
    CHECK(kind_of(world.move_to_position({0.0, 0.0, std::nan("")})) ==
          SkillErrorKind::invalid_target);
}

TEST_CASE("close_gripper attaches the nearest graspable object within radius") {
    World world = World::for_task(task("milk-reaching"));
    // hammer graspable point is (0.22, -0.3, 0.02); hover, then stop 0.02 m above it
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.3}).is_error());
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.04}).is_error());
    SkillResult r = world.close_gripper();
    CHECK(!r.is_error());
    CHECK(world.held().count("hammer") == 1);

    SUBCASE("held objects ride rigidly with the gripper") {
        Vec3 before = world.get_position("hammer").value->vec;
        REQUIRE(!world.move_to_position({0.32, -0.3, 0.04}).is_error());
        Vec3 after = world.get_position("hammer").value->vec;
        CHECK(after.x == doctest::Approx(before.x + 0.1));
        CHECK(after.y == doctest::Approx(before.y));
    }
}

TEST_CASE("close_gripper on empty space closes without error or attachment") {
    World world = World::for_task(task("milk-reaching"));
    REQUIRE(!world.move_to_position({-0.3, -0.3, 0.3}).is_error());
    SkillResult r = world.close_gripper();
    CHECK(!r.is_error());
    CHECK(world.held().empty());
    CHECK(world.gripper_closed());
}

TEST_CASE("open_gripper releases and snaps the object onto the surface below") {
    World world = World::for_task(task("milk-reaching"));
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.3}).is_error());
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.02}).is_error());
    REQUIRE(!world.close_gripper().is_error());
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.3}).is_error());
    REQUIRE(!world.open_gripper().is_error());
    Vec3 rest = world.get_position("hammer").value->vec;
    CHECK(rest.z == doctest::Approx(0.02));  // back on the table
    CHECK(world.support_of("hammer") == "table");
}

TEST_CASE("hook drag: held hammer overlapping the milk couples it to the motion") {
    World world = World::for_task(task("milk-reaching"));
    auto trace = run_script(world, kMilkScript);
    CHECK(!trace.halted());
    CHECK(is_success("milk-reaching", world));
    Vec3 milk = world.get_position("milk").value->vec;
    CHECK(milk.x == doctest::Approx(0.45));
    CHECK(distance(milk, world.scene().robot.workspace_center) <
          world.scene().robot.workspace_radius);
}

TEST_CASE("moving an empty open gripper through free space moves nothing else") {
    World world = World::for_task(task("milk-reaching"));
    nlohmann::json before = world.snapshot_json()["objects"];
    REQUIRE(!world.move_to_position({0.1, 0.1, 0.4}).is_error());
    CHECK(world.snapshot_json()["objects"] == before);
}

TEST_CASE("lifting the scroll is blocked by the environment constraint") {
    World world = World::for_task(task("can-grasping"));
    REQUIRE(!world.move_to_position({0.33, -0.15, 0.3}).is_error());
    REQUIRE(!world.move_to_position({0.33, -0.15, 0.005}).is_error());
    REQUIRE(!world.close_gripper().is_error());
    REQUIRE(world.held().count("scroll") == 1);
    SkillResult lift = world.move_to_position({0.33, -0.15, 0.3});
    CHECK(kind_of(lift) == SkillErrorKind::invalid_target);
    SkillResult slide = world.move_to_position({0.23, -0.15, 0.005});
    CHECK(!slide.is_error());
}

TEST_CASE("can-grasping golden: push can onto scroll, drag scroll, grasp can") {
    World world = World::for_task(task("can-grasping"));
    auto trace = run_script(world, kCanScript);
    CHECK(!trace.halted());
    CHECK(is_success("can-grasping", world));
    // the can rode the scroll into the workspace
    Vec3 can = world.get_position("can").value->vec;
    CHECK(can.x == doctest::Approx(0.43));
    CHECK(can.y == doctest::Approx(-0.15));
    CHECK(world.held().count("can") == 1);
}

TEST_CASE("button-pressing golden: merge blocks, press with the composite") {
    World world = World::for_task(task("button-pressing"));
    auto trace = run_script(world, kButtonScript);
    CHECK(!trace.halted());
    CHECK(world.flags().button_pressed);
    CHECK(is_success("button-pressing", world));
    // merged composite extends as one rigid body
    Vec3 size = world.get_size("block_a").value->vec;
    CHECK(size.x == doctest::Approx(0.36));
    CHECK(size.y == doctest::Approx(0.05));
}

TEST_CASE("magnet merge snaps flush and the merged extent is the summed AABB") {
    SceneConfig scene = task("button-pressing").scene;
    // two 0.05 m cubes, faces 8 mm apart along x
    scene.objects[1].size = {0.05, 0.05, 0.05};
    scene.objects[1].position = {0.2, 0.2, 0.025};
    scene.objects[2].size = {0.05, 0.05, 0.05};
    scene.objects[2].position = {0.258, 0.2, 0.025};
    World world(scene);
    Vec3 size = world.get_size("block_a").value->vec;
    CHECK(size.x == doctest::Approx(0.10));  // hand-computed merged AABB
    CHECK(size.y == doctest::Approx(0.05));
    CHECK(size.z == doctest::Approx(0.05));
    CHECK(world.group_of("block_a").count("block_b") == 1);
}

TEST_CASE("walk crossing rules: small gap passes, wide gap fails, bridge repairs") {
    TaskSpec small = task("sofa-traversing-small-gap");
    World w_small = World::for_task(small);
    SkillResult ok = w_small.walk_to_position({0.4, 0.0, 0.6});
    CHECK(!ok.is_error());
    CHECK(w_small.robot().support == "sofa_b");

    TaskSpec wide = task("sofa-traversing");
    World w_wide = World::for_task(wide);
    SkillResult blocked = w_wide.walk_to_position({0.7, 0.0, 0.6});
    CHECK(kind_of(blocked) == SkillErrorKind::gap_too_wide);
    CHECK(blocked.error->values[0].second == doctest::Approx(0.3));
    CHECK(blocked.error->values[1].second == doctest::Approx(0.1));

    SkillResult push = w_wide.push_to_position("surfboard", {0.05, 0.0, 0.625}, 0.0);
    REQUIRE(!push.is_error());
    CHECK(w_wide.flags().gap_spanned_by.size() == 1);
    SkillResult crossed = w_wide.walk_to_position({0.7, 0.0, 0.6});
    CHECK(!crossed.is_error());
    CHECK(w_wide.robot().support == "sofa_b");
    CHECK(is_success("sofa-traversing", w_wide));
}

TEST_CASE("sofa-traversing golden script end state") {
    World world = World::for_task(task("sofa-traversing"));
    auto trace = run_script(world, kTraverseScript);
    CHECK(!trace.halted());
    CHECK(world.robot().support == "sofa_b");
    // push phases recorded distinctly and in order
    REQUIRE(trace.entries.size() == 3);
    const auto& notes = trace.entries[1].notes;
    REQUIRE(notes.size() == 3);
    CHECK(notes[0].find("rotate") != std::string::npos);
    CHECK(notes[1].find("push_y") != std::string::npos);
    CHECK(notes[2].find("push_x") != std::string::npos);
}

TEST_CASE("climb rules: direct sofa is too high, staircase passes") {
    TaskSpec t = task("sofa-climbing");
    World direct = World::for_task(t);
    REQUIRE(!direct.walk_to_position({1.6, 0.9, 0.0}).is_error());
    SkillResult too_high = direct.climb_to_position({1.6, 0.0, 0.55});
    CHECK(kind_of(too_high) == SkillErrorKind::step_too_high);
    CHECK(too_high.error->values[0].second == doctest::Approx(0.55));
    CHECK(too_high.error->values[1].second == doctest::Approx(0.3));

    World stairs = World::for_task(t);
    auto trace = run_script(stairs, kClimbScript);
    CHECK(!trace.halted());
    CHECK(stairs.robot().support == "sofa");
    CHECK(is_success("sofa-climbing", stairs));
}

TEST_CASE("low sofa variant climbs directly") {
    World world = World::for_task(task("sofa-climbing-low"));
    REQUIRE(!world.walk_to_position({0.45, -0.55, 0.0}).is_error());
    SkillResult up = world.climb_to_position({1.5, -0.3, 0.25});
    CHECK(!up.is_error());
    CHECK(world.robot().support == "sofa");
}

TEST_CASE("push protocol: over-mass object is rejected with the limit") {
    World world = World::for_task(task("cube-lifting"));
    SkillResult r = world.push_to_position("cube", {1.5, 0.5, 0.12}, 0.0);
    CHECK(kind_of(r) == SkillErrorKind::over_mass_limit);
    CHECK(r.error->values[0].second == doctest::Approx(12.0));
    CHECK(r.error->values[1].second == doctest::Approx(5.0));
    CHECK(kind_of(world.push_to_position("nothing", {0, 0, 0}, 0)) ==
          SkillErrorKind::unknown_object);
}

TEST_CASE("push to the current pose succeeds with zero net displacement") {
    World world = World::for_task(task("sofa-climbing"));
    Vec3 before = world.get_position("small_box").value->vec;
    SkillResult r = world.push_to_position("small_box", before, 0.0);
    CHECK(!r.is_error());
    CHECK(world.get_position("small_box").value->vec == before);
    REQUIRE(r.notes.size() == 3);  // phases still reported, all zero delta
}

TEST_CASE("cube-lifting golden: lever fires only after chair removal and mounting") {
    World world = World::for_task(task("cube-lifting"));
    CHECK(!world.flags().cube_lifted);
    REQUIRE(!world.push_to_position("chair", {0.55, 0.8, 0.2}, 0.0).is_error());
    CHECK(!world.flags().cube_lifted);  // chair gone, robot not on the lever yet
    REQUIRE(!world.walk_to_position({0.55, 0.0, 0.02}).is_error());
    CHECK(world.robot().support == "surfboard");
    CHECK(world.flags().cube_lifted);
    CHECK(is_success("cube-lifting", world));
}

TEST_CASE("lever does not fire when the robot mounts while the chair still sits") {
    World world = World::for_task(task("cube-lifting"));
    // walk onto the load half of the board (chair still on the far half)
    REQUIRE(!world.walk_to_position({0.95, -0.1, 0.02}).is_error());
    CHECK(world.robot().support == "surfboard");
    CHECK(!world.flags().cube_lifted);
}

TEST_CASE("initial state of every benchmark task is not successful") {
    for (const auto& id : benchmark_task_ids()) {
        World world = World::for_task(task(id));
        CHECK(!is_success(id, world));
    }
    World world = World::for_task(task("sofa-traversing"));
    CHECK_THROWS_AS(is_success("bogus-task", world), std::invalid_argument);
}

TEST_CASE("sofa-traversing with robot still on sofa A is not successful") {
    World world = World::for_task(task("sofa-traversing"));
    REQUIRE(!world.walk_to_position({-0.9, -0.3, 0.6}).is_error());
    CHECK(!is_success("sofa-traversing", world));
}

TEST_CASE("determinism: identical scripts and seeds give identical traces") {
    static std::string first_dump;
    for (int run = 0; run < 2; ++run) {
        World world = World::for_task(task("sofa-climbing"));
        world.set_planner_seed(42);
        auto trace = run_script(world, kClimbScript);
        std::string dump = trace.to_json().dump();
        if (run == 0) {
            first_dump = dump;
        } else {
            CHECK(dump == first_dump);
        }
    }
}

TEST_CASE("conservation: free objects never interpenetrate beyond 1 mm after skills") {
    const struct {
        const char* stem;
        const char* source;
    } cases[] = {
        {"milk-reaching", kMilkScript},      {"can-grasping", kCanScript},
        {"button-pressing", kButtonScript},  {"sofa-traversing", kTraverseScript},
        {"sofa-climbing", kClimbScript},     {"cube-lifting", kCubeScript},
    };
    for (const auto& c : cases) {
        TaskSpec t = task(c.stem);
        World world = World::for_task(t);
        script::Program program = script::parse(c.source);
        script::ExecutionTrace trace = script::interpret(program, world);
        CHECK(!trace.halted());
        // recheck pairwise AABBs of non-held objects in every post-state
        for (const auto& entry : trace.entries) {
            const auto& objs = entry.state["objects"];
            for (auto a = objs.begin(); a != objs.end(); ++a) {
                if (a.value()["held"].get<bool>()) continue;
                for (auto b = std::next(a); b != objs.end(); ++b) {
                    if (b.value()["held"].get<bool>()) continue;
                    const ObjectSpec* sa = t.scene.find_object(a.key());
                    const ObjectSpec* sb = t.scene.find_object(b.key());
                    Vec3 pa{a.value()["position"][0], a.value()["position"][1],
                            a.value()["position"][2]};
                    Vec3 pb{b.value()["position"][0], b.value()["position"][1],
                            b.value()["position"][2]};
                    Aabb ba = box_world_aabb(pa, sa->size, a.value()["yaw"].get<double>());
                    Aabb bb = box_world_aabb(pb, sb->size, b.value()["yaw"].get<double>());
                    bool overlap = ba.intersects(bb, 0.001);
                    if (overlap) {
                        MESSAGE(c.stem, ": ", a.key(), " vs ", b.key(), " at statement ",
                                entry.index);
                    }
                    CHECK(!overlap);
                }
            }
        }
    }
}

TEST_CASE("attachment rigidity: held offsets stay constant to 1e-9") {
    World world = World::for_task(task("milk-reaching"));
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.3}).is_error());
    REQUIRE(!world.move_to_position({0.22, -0.3, 0.02}).is_error());
    REQUIRE(!world.close_gripper().is_error());
    Vec3 offset0 = world.get_position("hammer").value->vec - world.robot().position;
    const Vec3 targets[] = {{0.22, -0.3, 0.3}, {0.4, 0.1, 0.3}, {-0.2, 0.2, 0.15}};
    for (const Vec3& t : targets) {
        REQUIRE(!world.move_to_position(t).is_error());
        Vec3 offset = world.get_position("hammer").value->vec - world.robot().position;
        CHECK(std::abs(offset.x - offset0.x) < 1e-9);
        CHECK(std::abs(offset.y - offset0.y) < 1e-9);
        CHECK(std::abs(offset.z - offset0.z) < 1e-9);
    }
}

TEST_CASE("mechanism flags are monotone within a trial") {
    World world = World::for_task(task("sofa-traversing"));
    REQUIRE(!world.push_to_position("surfboard", {0.05, 0.0, 0.625}, 0.0).is_error());
    REQUIRE(world.flags().gap_spanned_by.size() == 1);
    auto spanned = world.flags().gap_spanned_by;
    // push the board away again; the flag must not reset
    REQUIRE(!world.push_to_position("surfboard", {-0.5, 0.3, 0.625}, 0.0).is_error());
    CHECK(world.flags().gap_spanned_by == spanned);
}

TEST_CASE("constraint soundness: recomputing errors from the pre-state agrees") {
    // gap_too_wide reports the actual surface gap
    TaskSpec wide = task("sofa-traversing");
    World world = World::for_task(wide);
    SkillResult blocked = world.walk_to_position({0.7, 0.0, 0.6});
    REQUIRE(blocked.is_error());
    const ObjectSpec* a = wide.scene.find_object("sofa_a");
    const ObjectSpec* b = wide.scene.find_object("sofa_b");
    double gap = b->world_aabb().lo.x - a->world_aabb().hi.x;
    CHECK(blocked.error->values[0].second == doctest::Approx(gap));
    CHECK(blocked.error->values[1].second == doctest::Approx(wide.scene.robot.gap_limit));

    // out_of_workspace reports the actual distance
    TaskSpec milk = task("milk-reaching");
    World arm = World::for_task(milk);
    Vec3 target = milk.scene.find_object("milk")->position;
    SkillResult far = arm.move_to_position(target);
    REQUIRE(far.is_error());
    CHECK(far.error->values[0].second ==
          doctest::Approx(distance(target, milk.scene.robot.workspace_center)));

    // over_mass_limit reports the actual mass
    TaskSpec cube = task("cube-lifting");
    World quad = World::for_task(cube);
    SkillResult heavy = quad.push_to_position("cube", {1.5, 0.5, 0.12}, 0.0);
    REQUIRE(heavy.is_error());
    CHECK(heavy.error->values[0].second == doctest::Approx(cube.scene.find_object("cube")->mass));

    // step_too_high reports the actual rise
    TaskSpec climb = task("sofa-climbing");
    World stepper = World::for_task(climb);
    REQUIRE(!stepper.walk_to_position({1.6, 0.9, 0.0}).is_error());
    SkillResult high = stepper.climb_to_position({1.6, 0.0, 0.55});
    REQUIRE(high.is_error());
    CHECK(high.error->values[0].second ==
          doctest::Approx(climb.scene.find_object("sofa")->world_aabb().hi.z));
}
