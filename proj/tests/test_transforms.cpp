// Transform op semantics: unit tests for the named edge cases plus the
// executor-oracle suite over generated payloads.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "generators.hpp"
#include "tfc/context.hpp"
#include "tfc/text.hpp"

using namespace tfc;

namespace {

struct Fixture {
  Context ctx = Context::standard();

  Module payload(const std::string &text) {
    auto r = parsePayload(text, ctx.payload);
    REQUIRE_MESSAGE(r.ok(), r.diags.str());
    return std::move(*r.module);
  }

  Script script(const std::string &text) {
    auto r = parseTransform(text, ctx.transforms, ctx.payload);
    REQUIRE_MESSAGE(r.ok(), r.diags.str());
    return std::move(*r.script);
  }

  // Applies script text; returns the interp result.
  InterpResult apply(Module &m, const std::string &script_text) {
    Script s = script(script_text);
    InterpOptions opts;
    opts.collect_trace = false;
    return ctx.apply(s, m, opts);
  }

  // Oracle: payload results unchanged by the script (exact or 1e-6).
  void checkPreserves(const tfc_test::GenPayload &p, const std::string &script_text,
                      bool exact) {
    Module before = payload(p.text);
    Module after = before;
    InterpResult r = apply(after, script_text);
    REQUIRE_MESSAGE(r.ok, (r.error.message + "\n" + p.text));
    CHECK_MESSAGE(verifyModule(after, ctx.payload).items.empty(), p.text);
    auto e1 = execute(before, ctx.payload, p.entry, p.args);
    auto e2 = execute(after, ctx.payload, p.entry, p.args);
    REQUIRE_MESSAGE(e1.ok, e1.error.message);
    REQUIRE_MESSAGE(e2.ok, (e2.error.message + "\n--- payload:\n" + p.text +
                            "\n--- transformed:\n" +
                            printModule(after, ctx.payload)));
    if (exact)
      CHECK_MESSAGE(execResultsEqualExact(e1, e2), p.text);
    else
      CHECK_MESSAGE(execResultsClose(e1, e2, 1e-6), p.text);
  }
};

int countOps(const Module &m, const std::string &name) {
  int n = 0;
  walk(m.root, [&](const Operation &op) {
    if (op.name == name)
      ++n;
    return true;
  });
  return n;
}

const char *kSimpleLoop = R"(
func.func @main {
^bb0(%A: memref<12xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c12 = arith.constant {value = 12} : index
  %k3 = arith.constant {value = 3} : i64
  %k5 = arith.constant {value = 5} : i64
  scf.for(%c0, %c12, %c1) {label = "L0"} {
  ^b(%i: index):
    %inv = arith.muli(%k3, %k5)
    %v = memref.load(%A, %i)
    %w = arith.addi(%v, %inv)
    memref.store(%w, %A, %i)
    scf.yield
  }
  func.return
}
)";

} // namespace

//===----------------------------------------------------------------------===//
// Unit tests for spec'd edge cases
//===----------------------------------------------------------------------===//

TEST_CASE("hoist moves an invariant chain in dependency order") {
  Fixture f;
  Module m = f.payload(R"(
func.func @main {
^bb0(%A: memref<8xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c8 = arith.constant {value = 8} : index
  %k = arith.constant {value = 3} : i64
  scf.for(%c0, %c8, %c1) {label = "L0"} {
  ^b(%i: index):
    %a = arith.muli(%k, %k)
    %b = arith.addi(%a, %k)
    %v = memref.load(%A, %i)
    %w = arith.addi(%v, %b)
    memref.store(%w, %A, %i)
    scf.yield
  }
  func.return
}
)");
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %h = loop.hoist_invariants(%l)
}
)");
  REQUIRE_MESSAGE(r.ok, r.error.message);
  const Operation *func = nullptr;
  walk(m.root, [&](const Operation &op) {
    if (op.name == "func.func")
      func = &op;
    return func == nullptr;
  });
  const Block &body = func->regions[0].blocks[0];
  // a (muli) and b (addi) hoisted, in that order, before the loop.
  int muli_at = -1, addi_at = -1, loop_at = -1;
  for (size_t i = 0; i < body.ops.size(); ++i) {
    if (body.ops[i].name == "arith.muli")
      muli_at = static_cast<int>(i);
    if (body.ops[i].name == "arith.addi" && addi_at < 0)
      addi_at = static_cast<int>(i);
    if (body.ops[i].name == "scf.for")
      loop_at = static_cast<int>(i);
  }
  CHECK(muli_at >= 0);
  CHECK(muli_at < addi_at);
  CHECK(addi_at < loop_at);
}

TEST_CASE("hoist with nothing hoistable returns an empty handle, not an error") {
  Fixture f;
  Module m = f.payload(R"(
func.func @main {
^bb0(%A: memref<8xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c8 = arith.constant {value = 8} : index
  scf.for(%c0, %c8, %c1) {
  ^b(%i: index):
    %v = memref.load(%A, %i)
    memref.store(%v, %A, %i)
    scf.yield
  }
  func.return
}
)");
  Module before = m;
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %h = loop.hoist_invariants(%l)
}
)");
  REQUIRE(r.ok);
  CHECK(structurallyEqual(m, before));
}

TEST_CASE("split: trip counts sum and degenerate parts materialize") {
  Fixture f;

  SUBCASE("split at the upper bound leaves an empty second loop") {
    Module m = f.payload(kSimpleLoop);
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %a, %b = loop.split(%l) {at = 12}
}
)");
    REQUIRE_MESSAGE(r.ok, r.error.message);
    CHECK(countOps(m, "scf.for") == 2);
  }

  SUBCASE("misaligned split point is silenceable") {
    Module m = f.payload(R"(
func.func @main {
^bb0(%A: memref<12xi64>):
  %c0 = arith.constant {value = 0} : index
  %c2 = arith.constant {value = 2} : index
  %c12 = arith.constant {value = 12} : index
  scf.for(%c0, %c12, %c2) {
  ^b(%i: index):
    scf.yield
  }
  func.return
}
)");
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %a, %b = loop.split(%l) {at = 5}
}
)");
    REQUIRE_FALSE(r.ok);
    CHECK(r.error.severity == Severity::Silenceable);
  }
}

TEST_CASE("tile: non-divisible sizes fail silenceably, motivating split") {
  Fixture f;
  Module m = f.payload(R"(
func.func @main {
^bb0(%A: memref<196xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c196 = arith.constant {value = 196} : index
  scf.for(%c0, %c196, %c1) {label = "i"} {
  ^b(%i: index):
    %v = memref.load(%A, %i)
    memref.store(%v, %A, %i)
    scf.yield
  }
  func.return
}
)");
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %o, %i = loop.tile(%l) {sizes = [32]}
}
)");
  REQUIRE_FALSE(r.ok);
  CHECK(r.error.severity == Severity::Silenceable);
  CHECK(r.error.message.find("not divisible") != std::string::npos);
  CHECK(r.error.message.find("split") != std::string::npos);
}

TEST_CASE("tile by a divisor produces the strip-mined pair") {
  Fixture f;
  Module m = f.payload(R"(
func.func @main {
^bb0(%A: memref<192xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c192 = arith.constant {value = 192} : index
  scf.for(%c0, %c192, %c1) {label = "i"} {
  ^b(%i: index):
    %v = memref.load(%A, %i)
    memref.store(%v, %A, %i)
    scf.yield
  }
  func.return
}
)");
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %o, %i = loop.tile(%l) {sizes = [32]}
}
)");
  REQUIRE_MESSAGE(r.ok, r.error.message);
  // Exactly 2 loops: outer stepping 32 over [0,192), inner of 32 iterations.
  CHECK(countOps(m, "scf.for") == 2);
  const Operation *outer = nullptr;
  walk(m.root, [&](const Operation &op) {
    if (op.name == "scf.for") {
      outer = &op;
      return false;
    }
    return true;
  });
  auto bounds = staticLoopBounds(m, *outer);
  REQUIRE(bounds.has_value());
  CHECK(bounds->trip() == 6);
  CHECK(bounds->step == 32);
}

TEST_CASE("2-D tile reorders loops as outer band then inner band") {
  Fixture f;
  tfc_test::PayloadGen gen(11);
  tfc_test::GenPayload p = gen.matmul(1, 8, 8, 4, true, false);
  Module m = f.payload(p.text);
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "i"}
  %o, %i = loop.tile(%l) {sizes = [4, 4]}
}
)");
  REQUIRE_MESSAGE(r.ok, r.error.message);
  // Nest order: i (outer band), j (outer band), i.in, j.in, k.
  std::vector<std::string> labels;
  walk(m.root, [&](const Operation &op) {
    if (op.name == "scf.for" && op.attr("label"))
      labels.push_back(op.attr("label")->asStr());
    return true;
  });
  CHECK(labels == std::vector<std::string>{"i", "j", "i.in", "j.in", "k"});
}

TEST_CASE("unroll edge cases") {
  Fixture f;

  SUBCASE("full unroll replicates the body trip-count times") {
    Module m = f.payload(kSimpleLoop);
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  loop.unroll(%l) {factor = 0}
}
)");
    REQUIRE_MESSAGE(r.ok, r.error.message);
    CHECK(countOps(m, "scf.for") == 0);
    CHECK(countOps(m, "memref.store") == 12);
  }

  SUBCASE("factor 1 is a noop but still consumes the handle") {
    Module m = f.payload(kSimpleLoop);
    Module before = m;
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  loop.unroll(%l) {factor = 1}
  loop.unroll(%l) {factor = 2}
}
)");
    REQUIRE_FALSE(r.ok); // the handle was consumed by the noop unroll
    CHECK(r.error.message.find("invalidated") != std::string::npos);
    Module m2 = f.payload(kSimpleLoop);
    InterpResult r2 = f.apply(m2, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  loop.unroll(%l) {factor = 1}
}
)");
    REQUIRE(r2.ok);
    CHECK(structurallyEqual(m2, before));
  }

  SUBCASE("non-dividing factor is silenceable") {
    Module m = f.payload(kSimpleLoop);
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  loop.unroll(%l) {factor = 5}
}
)");
    REQUIRE_FALSE(r.ok);
    CHECK(r.error.severity == Severity::Silenceable);
  }
}

TEST_CASE("interchange: identity permutation yields the same structure") {
  Fixture f;
  tfc_test::PayloadGen gen(5);
  tfc_test::GenPayload p = gen.matmul(1, 4, 4, 4, true, false);
  Module m = f.payload(p.text);
  Module before = m;
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "i"}
  %n = loop.interchange(%l) {perm = [0, 1]}
}
)");
  REQUIRE_MESSAGE(r.ok, r.error.message);
  CHECK(structurallyEqual(m, before));
}

TEST_CASE("interchange rejects a non-permutation in the verifier") {
  Fixture f;
  auto parsed = parseTransform(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %n = loop.interchange(%l) {perm = [0, 0]}
}
)",
                               f.ctx.transforms, f.ctx.payload);
  REQUIRE_FALSE(parsed.ok());
  CHECK(parsed.diags.str().find("permutation") != std::string::npos);
}

TEST_CASE("vectorize marker: innermost only, semantics neutral") {
  Fixture f;
  tfc_test::PayloadGen gen(9);
  tfc_test::GenPayload p = gen.matmul(1, 4, 4, 8, true, false);

  SUBCASE("innermost accepts and reduces cost") {
    Module m = f.payload(p.text);
    Module before = m;
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "k"}
  loop.vectorize_marker(%l)
}
)");
    REQUIRE_MESSAGE(r.ok, r.error.message);
    auto e1 = execute(before, f.ctx.payload, "main", p.args);
    auto e2 = execute(m, f.ctx.payload, "main", p.args);
    CHECK(execResultsEqualExact(e1, e2));
    CHECK(e2.cost.weighted_cost < e1.cost.weighted_cost);
  }

  SUBCASE("non-innermost is silenceable") {
    Module m = f.payload(p.text);
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "i"}
  loop.vectorize_marker(%l)
}
)");
    REQUIRE_FALSE(r.ok);
    CHECK(r.error.severity == Severity::Silenceable);
  }
}

TEST_CASE("to_library replaces matching nests and fails silenceably otherwise") {
  Fixture f;
  f.ctx.kernels.add({"k448", 4, 4, 8, TypeKind::F64, std::nullopt});
  tfc_test::PayloadGen gen(13);

  SUBCASE("batched nest with an exact kernel") {
    tfc_test::GenPayload p = gen.matmul(2, 4, 4, 8, true, true);
    Module m = f.payload(p.text);
    Module before = m;
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "b"}
  %call = transform.to_library(%l)
}
)");
    REQUIRE_MESSAGE(r.ok, r.error.message);
    CHECK(countOps(m, "lib.call_kernel") == 1);
    CHECK(countOps(m, "scf.for") == 0);
    auto e1 = execute(before, f.ctx.payload, "main", p.args);
    auto e2 = execute(m, f.ctx.payload, "main", p.args);
    CHECK(execResultsClose(e1, e2, 1e-6));
  }

  SUBCASE("no kernel with the required sizes") {
    tfc_test::GenPayload p = gen.matmul(2, 4, 4, 4, true, true);
    Module m = f.payload(p.text);
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "b"}
  %call = transform.to_library(%l)
}
)");
    REQUIRE_FALSE(r.ok);
    CHECK(r.error.severity == Severity::Silenceable);
    CHECK(r.error.message.find("microkernel library has no implementation") !=
          std::string::npos);
  }

  SUBCASE("pattern mismatch is silenceable") {
    Module m = f.payload(kSimpleLoop);
    InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %call = transform.to_library(%l)
}
)");
    REQUIRE_FALSE(r.ok);
    CHECK(r.error.severity == Severity::Silenceable);
  }
}

//===----------------------------------------------------------------------===//
// Oracle suite: semantics preservation over generated payloads
//===----------------------------------------------------------------------===//

TEST_CASE("oracle: hoist_invariants preserves semantics (100 payloads)") {
  Fixture f;
  tfc_test::PayloadGen gen(101);
  for (int n = 0; n < 100; ++n) {
    tfc_test::GenOptions opt;
    opt.f64 = n % 3 == 0;
    opt.allow_if = !opt.f64;
    tfc_test::GenPayload p = gen.generate(opt);
    f.checkPreserves(p, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "L0"}
  %h = loop.hoist_invariants(%l)
}
)",
                     /*exact=*/true);
  }
}

TEST_CASE("oracle: split preserves semantics (100 payloads)") {
  Fixture f;
  tfc_test::PayloadGen gen(202);
  for (int n = 0; n < 100; ++n) {
    tfc_test::GenOptions opt;
    opt.f64 = n % 4 == 0;
    opt.allow_if = !opt.f64 && n % 2 == 0;
    tfc_test::GenPayload p = gen.generate(opt);
    std::int64_t at = 2; // every generated dim is >= 4
    std::string script = R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "L0"}
  %a, %b = loop.split(%l) {at = )" + std::to_string(at) + R"(}
}
)";
    f.checkPreserves(p, script, /*exact=*/true);
  }
}

TEST_CASE("oracle: tile preserves semantics within 1e-6 (100 payloads)") {
  Fixture f;
  tfc_test::PayloadGen gen(303);
  for (int n = 0; n < 100; ++n) {
    tfc_test::GenOptions opt;
    opt.f64 = n % 2 == 0;
    tfc_test::GenPayload p = gen.generate(opt);
    // Inner label exists only for depth-2 payloads; target L0 as a depth-1
    // tile (size 2 divides every generated dim).
    f.checkPreserves(p, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "L0"}
  %o, %i = loop.tile(%l) {sizes = [2]}
}
)",
                     /*exact=*/false);
  }
}

TEST_CASE("oracle: unroll preserves semantics exactly (100 payloads)") {
  Fixture f;
  tfc_test::PayloadGen gen(404);
  for (int n = 0; n < 100; ++n) {
    tfc_test::GenOptions opt;
    opt.f64 = n % 5 == 0;
    opt.allow_if = !opt.f64;
    tfc_test::GenPayload p = gen.generate(opt);
    std::string factor = n % 2 ? "2" : "0";
    f.checkPreserves(p, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "L0"}
  loop.unroll(%l) {factor = )" + factor + R"(}
}
)",
                     /*exact=*/true);
  }
}

TEST_CASE("oracle: interchange preserves semantics within 1e-6 (100 payloads)") {
  Fixture f;
  tfc_test::PayloadGen gen(505);
  for (int n = 0; n < 100; ++n) {
    std::int64_t m_dim = gen.pick({2, 4});
    std::int64_t n_dim = gen.pick({2, 4});
    std::int64_t k_dim = gen.pick({2, 4, 8});
    tfc_test::GenPayload p = gen.matmul(1, m_dim, n_dim, k_dim, n % 2 == 0, false);
    f.checkPreserves(p, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "i"}
  %x = loop.interchange(%l) {perm = [1, 0]}
}
)",
                     /*exact=*/false);
  }
}

TEST_CASE("oracle: to_library preserves semantics within 1e-6 (100 payloads)") {
  Fixture f;
  for (std::int64_t mm : {2, 4})
    for (std::int64_t nn : {2, 4})
      for (std::int64_t kk : {2, 4, 8})
        f.ctx.kernels.add({"g", mm, nn, kk, TypeKind::F64, std::nullopt});
  tfc_test::PayloadGen gen(606);
  for (int n = 0; n < 100; ++n) {
    std::int64_t m_dim = gen.pick({2, 4});
    std::int64_t n_dim = gen.pick({2, 4});
    std::int64_t k_dim = gen.pick({2, 4, 8});
    bool batched = n % 2 == 0;
    tfc_test::GenPayload p =
        gen.matmul(batched ? 2 : 1, m_dim, n_dim, k_dim, true, batched);
    std::string root_label = batched ? "b" : "i";
    f.checkPreserves(p, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = ")" +
                         root_label + R"("}
  %call = transform.to_library(%l)
}
)",
                     /*exact=*/false);
  }
}

//===----------------------------------------------------------------------===//
// Effect fidelity
//===----------------------------------------------------------------------===//

TEST_CASE("consuming transforms invalidate their operand; readonly ones do not") {
  Fixture f;
  struct Case {
    const char *use;
    bool consumes;
  };
  const Case cases[] = {
      {"%a, %b = loop.split(%l) {at = 2}", true},
      {"%o, %i2 = loop.tile(%l) {sizes = [2]}", true},
      {"loop.unroll(%l) {factor = 2}", true},
      {"%x = loop.interchange(%l) {perm = [0]}", true},
      {"%h = loop.hoist_invariants(%l)", false},
      {"loop.vectorize_marker(%l)", false},
  };
  for (const auto &c : cases) {
    tfc_test::PayloadGen gen(77);
    tfc_test::GenOptions opt;
    tfc_test::GenPayload p = gen.generate(opt);
    Module m = f.payload(p.text);
    std::string text = std::string(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"], where.label = "L0"}
  )") + c.use + R"(
  %probe = param.trip_count(%l)
}
)";
    InterpResult r = f.apply(m, text);
    if (c.consumes) {
      REQUIRE_FALSE(r.ok);
      CHECK(r.error.message.find("invalidated") != std::string::npos);
    } else {
      // The L0 loop may be innermost or not; vectorize can fail silenceably,
      // but never with an invalidation error.
      if (!r.ok)
        CHECK(r.error.message.find("invalidated") == std::string::npos);
    }
  }
}

TEST_CASE("structural postconditions: split trip sum, tile loop count") {
  Fixture f;
  Module m = f.payload(kSimpleLoop);
  InterpResult r = f.apply(m, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %a, %b = loop.split(%l) {at = 4}
}
)");
  REQUIRE(r.ok);
  std::vector<std::int64_t> trips;
  walk(m.root, [&](const Operation &op) {
    if (op.name == "scf.for")
      if (auto t = staticTripCount(m, op))
        trips.push_back(*t);
    return true;
  });
  REQUIRE(trips.size() == 2);
  CHECK(trips[0] + trips[1] == 12);

  Module m2 = f.payload(kSimpleLoop);
  InterpResult r2 = f.apply(m2, R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %l = structured.match(%root) {ops = ["scf.for"]}
  %o, %i = loop.tile(%l) {sizes = [4]}
}
)");
  REQUIRE(r2.ok);
  CHECK(countOps(m2, "scf.for") == 2); // 2 * number of nonzero sizes
}
