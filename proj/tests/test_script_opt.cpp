// Script-level optimization: inlining, simplification, invalidation
// analysis, pass-option inference.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tfc/context.hpp"
#include "tfc/executor.hpp"
#include "tfc/script_opt.hpp"
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

  Script reparse(const Module &m) {
    return script(printModule(m, ctx.transforms.dialectRegistry()));
  }
};

const char *kLoopPayload = R"(
func.func @g {
^bb0(%A: memref<24xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c24 = arith.constant {value = 24} : index
  %c5 = arith.constant {value = 5} : index
  scf.for(%c0, %c24, %c1) {label = "main"} {
  ^b(%i: index):
    %v = memref.load(%A, %i)
    %w = arith.addi(%v, %c5)
    memref.store(%w, %A, %i)
    scf.yield
  }
  func.return
}
)";

std::vector<ArgSpec> loopArgs() {
  BufferInit a;
  a.elem = TypeKind::I64;
  a.shape = {24};
  a.fill = BufferInit::Fill::Iota;
  return {ArgSpec::makeBuffer(a)};
}

} // namespace

TEST_CASE("include chains inline to a flat body") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @c {
^bb0(%cr: !any):
  %loops = structured.match(%cr) {ops = ["scf.for"]}
  loop.unroll(%loops) {factor = 2}
}
transform.named_sequence @b {
^bb0(%br: !any):
  transform.include @c(%br)
}
transform.named_sequence @a {
^bb0(%ar: !any):
  transform.include @b(%ar)
}
transform.named_sequence @transform_main {
^bb0(%root: !any):
  transform.include @a(%root)
}
)");
  auto inlined = inlineIncludes(s.module, f.ctx.transforms);
  REQUIRE_MESSAGE(inlined.ok(), inlined.diags.str());
  walk(inlined.module->root, [&](const Operation &op) {
    CHECK(op.name != "transform.include");
    return true;
  });
  // The entry body now holds the match + unroll directly.
  Script si = f.reparse(*inlined.module);
  const Operation *entry = si.sequence("transform_main");
  const Block &body = entry->regions[0].blocks[0];
  REQUIRE(body.ops.size() == 2);
  CHECK(body.ops[0].name == "structured.match");
  CHECK(body.ops[1].name == "loop.unroll");

  // Behavioral equivalence through the interpreter.
  Module m1 = f.payload(kLoopPayload);
  Module m2 = f.payload(kLoopPayload);
  REQUIRE(f.ctx.apply(s, m1, {}).ok);
  REQUIRE(f.ctx.apply(si, m2, {}).ok);
  CHECK(structurallyEqual(m1, m2));
}

TEST_CASE("self-include is rejected with the cycle listed") {
  Fixture f;
  // Bypass parseTransform (which also rejects cycles) to exercise the
  // dedicated error path.
  auto parsed = parseModuleText(R"(
transform.named_sequence @a {
^bb0(%ar: !any):
  transform.include @a(%ar)
}
)",
                                f.ctx.transforms.dialectRegistry());
  REQUIRE(parsed.module.has_value());
  auto inlined = inlineIncludes(*parsed.module, f.ctx.transforms);
  REQUIRE_FALSE(inlined.ok());
  CHECK(inlined.diags.str().find("@a -> @a") != std::string::npos);
}

TEST_CASE("simplify removes unroll-by-1 but keeps the consume effect") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %loops = structured.match(%root) {ops = ["scf.for"]}
  loop.unroll(%loops) {factor = 1}
  loop.unroll(%loops) {factor = 2}
}
)");
  Module simplified = simplifyScript(s.module, f.ctx.transforms);
  const Operation *entry = nullptr;
  walk(simplified.root, [&](const Operation &op) {
    if (op.name == "transform.named_sequence")
      entry = &op;
    return true;
  });
  const Block &body = entry->regions[0].blocks[0];
  REQUIRE(body.ops.size() == 3);
  CHECK(body.ops[1].name == "transform.forward");

  // Invalidation analysis still flags the later use.
  auto diags = analyzeInvalidation(simplified, f.ctx.transforms);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("transform.forward") != std::string::npos);
}

TEST_CASE("simplify folds constant params into attributes") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %loops = structured.match(%root) {ops = ["scf.for"]}
  %size = param.constant {value = 2}
  loop.unroll(%loops, %size)
}
)");
  Module simplified = simplifyScript(s.module, f.ctx.transforms);
  int param_ops = 0;
  const Operation *unroll = nullptr;
  walk(simplified.root, [&](const Operation &op) {
    if (op.name == "param.constant")
      ++param_ops;
    if (op.name == "loop.unroll")
      unroll = &op;
    return true;
  });
  CHECK(param_ops == 0);
  REQUIRE(unroll != nullptr);
  REQUIRE(unroll->attr("factor") != nullptr);
  CHECK(unroll->attr("factor")->asInt() == 2);
  CHECK(unroll->operands.size() == 1);

  // Equivalent payloads with and without simplification.
  Module m1 = f.payload(kLoopPayload);
  Module m2 = f.payload(kLoopPayload);
  REQUIRE(f.ctx.apply(s, m1, {}).ok);
  Script s2 = f.reparse(simplified);
  REQUIRE(f.ctx.apply(s2, m2, {}).ok);
  CHECK(structurallyEqual(m1, m2));
  auto e1 = execute(m1, f.ctx.payload, "g", loopArgs());
  auto e2 = execute(m2, f.ctx.payload, "g", loopArgs());
  CHECK(execResultsEqualExact(e1, e2));
}

TEST_CASE("simplify removes all-zero tiles and strict redundant re-tiles") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %loops = structured.match(%root) {ops = ["scf.for"], where.label = "main"}
  %o1, %i1 = loop.tile(%loops) {sizes = [4]}
  %o2, %i2 = loop.tile(%i1) {sizes = [8]}
  %o3, %i3 = loop.tile(%i2) {sizes = [0]}
}
)");
  Module simplified = simplifyScript(s.module, f.ctx.transforms);
  int tiles = 0, forwards = 0;
  walk(simplified.root, [&](const Operation &op) {
    if (op.name == "loop.tile")
      ++tiles;
    if (op.name == "transform.forward")
      ++forwards;
    return true;
  });
  CHECK(tiles == 1);    // only the first, genuine tile remains
  CHECK(forwards == 2); // re-tile by 8 (> 4) and tile by 0

  // The interpreter produces identical payloads either way.
  Module m1 = f.payload(kLoopPayload);
  Module m2 = f.payload(kLoopPayload);
  InterpResult r1 = f.ctx.apply(s, m1, {});
  REQUIRE_MESSAGE(r1.ok, r1.error.message);
  Script s2 = f.reparse(simplified);
  InterpResult r2 = f.ctx.apply(s2, m2, {});
  REQUIRE_MESSAGE(r2.ok, r2.error.message);
  CHECK(structurallyEqual(m1, m2));
}

TEST_CASE("equal-size re-tile is NOT removed (it restructures the loop)") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %loops = structured.match(%root) {ops = ["scf.for"]}
  %o1, %i1 = loop.tile(%loops) {sizes = [4]}
  %o2, %i2 = loop.tile(%i1) {sizes = [4]}
}
)");
  Module simplified = simplifyScript(s.module, f.ctx.transforms);
  int tiles = 0;
  walk(simplified.root, [&](const Operation &op) {
    if (op.name == "loop.tile")
      ++tiles;
    return true;
  });
  CHECK(tiles == 2);
}

TEST_CASE("invalidation analysis flags the deliberate second unroll") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %outer = structured.match(%root) {ops = ["scf.for"], where.label = "outer"}
  %hoisted = loop.hoist_invariants(%outer)
  %inner = structured.match(%outer) {ops = ["scf.for"], where.label = "inner"}
  %size = param.constant {value = 8}
  %main, %rest = loop.split(%inner, %size)
  %to, %ti = loop.tile(%main, %size)
  loop.unroll(%rest) {factor = 0}
  loop.unroll(%rest) {factor = 0}
}
)");
  auto diags = analyzeInvalidation(s.module, f.ctx.transforms);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("%rest") != std::string::npos);
  CHECK(diags[0].message.find("loop.unroll") != std::string::npos);
  CHECK(diags[0].loc.line == 11); // the second unroll
  CHECK(diags[0].message.find("at 10:") != std::string::npos); // cites the first
}

TEST_CASE("scripts without reuse analyze clean") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %outer = structured.match(%root) {ops = ["scf.for"], where.label = "outer"}
  %inner = structured.match(%outer) {ops = ["scf.for"], where.label = "inner"}
  %a, %b = loop.split(%inner) {at = 8}
  %to, %ti = loop.tile(%a) {sizes = [4]}
  loop.unroll(%b) {factor = 0}
}
)");
  CHECK(analyzeInvalidation(s.module, f.ctx.transforms).empty());
}

TEST_CASE("nesting alias: consuming the outer handle poisons inner matches") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %outer = structured.match(%root) {ops = ["scf.for"], where.label = "outer"}
  %inner = structured.match(%outer) {ops = ["scf.for"], where.label = "inner"}
  loop.unroll(%outer) {factor = 1}
  loop.unroll(%inner) {factor = 1}
}
)");
  auto diags = analyzeInvalidation(s.module, f.ctx.transforms);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("%inner") != std::string::npos);
}

TEST_CASE("identical sibling matches alias each other") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %h1 = structured.match(%root) {ops = ["scf.for"]}
  %h2 = structured.match(%root) {ops = ["scf.for"]}
  loop.unroll(%h1) {factor = 1}
  loop.unroll(%h2) {factor = 1}
}
)");
  auto diags = analyzeInvalidation(s.module, f.ctx.transforms);
  CHECK(diags.size() == 1);
}

TEST_CASE("consumption through include propagates to the caller") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @consume_it {
^bb0(%h: !op<scf.for>):
  loop.unroll(%h) {factor = 1}
}
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %loops = structured.match(%root) {ops = ["scf.for"]}
  transform.include @consume_it(%loops)
  loop.unroll(%loops) {factor = 1}
}
)");
  auto diags = analyzeInvalidation(s.module, f.ctx.transforms);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("transform.include") != std::string::npos);
}

TEST_CASE("pass option inference fills op= by abstraction level") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %m0 = structured.match(%root) {ops = ["builtin.module"]}
  %h1 = transform.apply_registered_pass(%m0) {pass = "instrument-accumulate"}
  %h2 = transform.apply_registered_pass(%h1) {pass = "convert-arith-to-llvmlite"}
  %h3 = transform.apply_registered_pass(%h2) {pass = "instrument-accumulate"}
  %h4 = transform.apply_registered_pass(%h3) {pass = "instrument-accumulate", options = "op=llvmlite.mul"}
}
)");
  auto inferred = inferPassOptions(s.module, f.ctx.transforms);
  REQUIRE_MESSAGE(inferred.ok(), inferred.diags.str());
  std::vector<std::string> options;
  walk(inferred.module->root, [&](const Operation &op) {
    if (op.name == "transform.apply_registered_pass" &&
        op.attr("pass")->asStr() == "instrument-accumulate")
      options.push_back(op.attr("options")->asStr());
    return true;
  });
  REQUIRE(options.size() == 3);
  CHECK(options[0] == "op=arith.addi");
  CHECK(options[1] == "op=llvmlite.add");
  CHECK(options[2] == "op=llvmlite.mul"); // already configured: unchanged
}

TEST_CASE("ambiguous level across alternatives is an inference error") {
  Fixture f;
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %m0 = structured.match(%root) {ops = ["builtin.module"]}
  transform.alternatives(%m0) {
  ^bb1(%g: !any):
    %h1 = transform.apply_registered_pass(%g) {pass = "convert-arith-to-llvmlite"}
  } {
  ^bb2(%g2: !any):
  }
  %m1 = structured.match(%root) {ops = ["builtin.module"]}
  %h2 = transform.apply_registered_pass(%m1) {pass = "instrument-accumulate"}
}
)");
  auto inferred = inferPassOptions(s.module, f.ctx.transforms);
  REQUIRE_FALSE(inferred.ok());
  CHECK(inferred.diags.str().find("ambiguous") != std::string::npos);
}

TEST_CASE("inference result interprets and verifies end to end") {
  Fixture f;
  Module m = f.payload(R"(
func.func @g {
^bb0(%x: i64, %y: i64):
  %a = arith.addi(%x, %y)
  func.return(%a)
}
)");
  Script s = f.script(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %m0 = structured.match(%root) {ops = ["builtin.module"]}
  %h1 = transform.apply_registered_pass(%m0) {pass = "instrument-accumulate"}
}
)");
  auto inferred = inferPassOptions(s.module, f.ctx.transforms);
  REQUIRE(inferred.ok());
  Script si = f.reparse(*inferred.module);
  InterpResult r = f.ctx.apply(si, m, {});
  REQUIRE_MESSAGE(r.ok, r.error.message);
  int addis = 0;
  walk(m.root, [&](const Operation &op) {
    if (op.name == "arith.addi")
      ++addis;
    return true;
  });
  CHECK(addis == 2);
  CHECK(verifyModule(m, f.ctx.payload).items.empty());
}
