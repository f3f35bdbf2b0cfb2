// Lowering passes, patterns, and the pipeline machinery.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_util.hpp"

#include "tfc/context.hpp"
#include "tfc/executor.hpp"
#include "tfc/text.hpp"

using namespace tfc;

namespace {

const char *kChunkDynamic = R"(
func.func @chunkTo42 {
^bb0(%A: memref<64x64xf64>, %offset: index):
  %c42 = arith.constant {value = 42.0} : f64
  %c4a = arith.constant {value = 4} : index
  %c4b = arith.constant {value = 4} : index
  %view = memref.subview(%A, %offset) {static_offsets = [?, 8], static_sizes = [4, 4], static_strides = [1, 1], segments = [1, 1, 0, 0]} : memref<4x4xf64, offset: ?, strides: [64, 1]>
  scf.forall(%c4a, %c4b) {
  ^bb1(%fi: index, %fj: index):
    memref.store(%c42, %view, %fi, %fj)
    scf.yield
  }
  func.return
}
)";

const char *kSevenPasses[] = {
    "convert-scf-to-cf",          "convert-arith-to-llvmlite",
    "convert-cf-to-llvmlite",     "convert-func-to-llvmlite",
    "expand-strided-metadata",    "finalize-memref-to-llvmlite",
    "reconcile-unrealized-casts",
};

struct Fixture {
  Context ctx = Context::standard();

  Module payload(const std::string &text) {
    auto r = parsePayload(text, ctx.payload);
    REQUIRE_MESSAGE(r.ok(), r.diags.str());
    return std::move(*r.module);
  }

  TransformStatus runPass(Module &m, const std::string &pass,
                          const std::string &options = "") {
    std::vector<PipelineEntry> pipe;
    PipelineEntry e;
    e.anchor = "builtin.module";
    e.pass = pass;
    e.options = *PassOptions::parse(options);
    pipe.push_back(e);
    return runPipelineDirect(m, pipe, ctx.passes, ctx.payload, &ctx.patterns);
  }

  std::vector<ArgSpec> chunkArgs(std::int64_t offset) {
    BufferInit a;
    a.elem = TypeKind::F64;
    a.shape = {64, 64};
    return {ArgSpec::makeBuffer(a), ArgSpec::makeInt(offset)};
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

} // namespace

TEST_CASE("convert-scf-to-cf removes structured control flow") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  Module original = m;
  auto s = f.runPass(m, "convert-scf-to-cf");
  REQUIRE_MESSAGE(s.isOk(), s.message);
  CHECK(countOps(m, "scf.for") == 0);
  CHECK(countOps(m, "scf.forall") == 0);
  CHECK(countOps(m, "cf.cond_br") > 0);
  CHECK(verifyModule(m, f.ctx.payload).items.empty());

  // 4x4 view written with 42: executor equality against the structured form.
  auto before = execute(original, f.ctx.payload, "chunkTo42", f.chunkArgs(5));
  auto after = execute(m, f.ctx.payload, "chunkTo42", f.chunkArgs(5));
  REQUIRE(before.ok);
  REQUIRE_MESSAGE(after.ok, after.error.message);
  CHECK(execResultsEqualExact(before, after));

  // Spot-check semantics directly: cells [5..9)x[8..12) hold 42.
  const auto &buf = before.arg_buffers[0];
  CHECK(buf.f64[5 * 64 + 8] == 42.0);
  CHECK(buf.f64[8 * 64 + 11] == 42.0);
  CHECK(buf.f64[0] == 0.0);
  int cells = 0;
  for (double v : buf.f64)
    if (v == 42.0)
      ++cells;
  CHECK(cells == 16);
}

TEST_CASE("the un-fixed seven-pass pipeline fails with the cast legalization error") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  std::vector<PipelineEntry> pipe;
  for (const char *p : kSevenPasses)
    pipe.push_back({"builtin.module", p, {}});
  auto s = runPipelineDirect(m, pipe, f.ctx.passes, f.ctx.payload, &f.ctx.patterns);
  REQUIRE_FALSE(s.isOk());
  CHECK(s.kind == TransformStatusKind::Silenceable);
  CHECK(s.message == "failed to legalize operation "
                     "'builtin.unrealized_conversion_cast' that was explicitly "
                     "marked illegal");
}

TEST_CASE("adding lower-affine plus a second arith conversion fixes the pipeline") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  Module original = m;
  std::vector<PipelineEntry> pipe;
  for (const char *p : kSevenPasses) {
    pipe.push_back({"builtin.module", p, {}});
    if (std::string(p) == "expand-strided-metadata") {
      pipe.push_back({"builtin.module", "lower-affine", {}});
      pipe.push_back({"builtin.module", "convert-arith-to-llvmlite", {}});
    }
  }
  auto s = runPipelineDirect(m, pipe, f.ctx.passes, f.ctx.payload, &f.ctx.patterns);
  REQUIRE_MESSAGE(s.isOk(), s.message);
  // Fully lowered: only llvmlite dialect ops remain inside the module.
  walk(m.root, [&](const Operation &op) {
    if (op.name != "builtin.module")
      CHECK(op.dialect() == "llvmlite");
    return true;
  });
  CHECK(verifyModule(m, f.ctx.payload).items.empty());

  // End-to-end equality with the scf-level program.
  auto before = execute(original, f.ctx.payload, "chunkTo42", f.chunkArgs(7));
  auto after = execute(m, f.ctx.payload, "chunkTo42", f.chunkArgs(7));
  REQUIRE(before.ok);
  REQUIRE_MESSAGE(after.ok, after.error.message);
  CHECK(execResultsEqualExact(before, after));
}

TEST_CASE("static checking reports the residual affine.apply") {
  Fixture f;
  std::string script_text = R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %m0 = structured.match(%root) {ops = ["builtin.module"]}
  %h1 = transform.apply_registered_pass(%m0) {pass = "convert-scf-to-cf"}
  %h2 = transform.apply_registered_pass(%h1) {pass = "convert-arith-to-llvmlite"}
  %h3 = transform.apply_registered_pass(%h2) {pass = "convert-cf-to-llvmlite"}
  %h4 = transform.apply_registered_pass(%h3) {pass = "convert-func-to-llvmlite"}
  %h5 = transform.apply_registered_pass(%h4) {pass = "expand-strided-metadata"}
  %h6 = transform.apply_registered_pass(%h5) {pass = "finalize-memref-to-llvmlite"}
  %h7 = transform.apply_registered_pass(%h6) {pass = "reconcile-unrealized-casts"}
}
)";
  auto parsed = parseTransform(script_text, f.ctx.transforms, f.ctx.payload);
  REQUIRE_MESSAGE(parsed.ok(), parsed.diags.str());
  const Operation *entry = parsed.script->sequence("transform_main");
  StaticReport report = checkStatic(
      parsed.script->module, *entry, OpSetExpr::parse("func.*, scf.*, arith.*, memref.*"),
      OpSetExpr::parse("llvmlite.*"), f.ctx.signatureResolver(), f.ctx.payload);
  REQUIRE(report.findings.size() == 1);
  CHECK(report.findings[0].kind == StaticFinding::Kind::ResidualOp);
  CHECK(report.findings[0].atom == "affine.apply");
  CHECK(report.findings[0].transform.find("expand-strided-metadata") !=
        std::string::npos);

  // The fixed pipeline checks clean.
  std::string fixed = script_text;
  auto pos = fixed.find("%h6 =");
  fixed.insert(pos,
               "%f1 = transform.apply_registered_pass(%h5) {pass = \"lower-affine\"}\n"
               "  %f2 = transform.apply_registered_pass(%f1) {pass = "
               "\"convert-arith-to-llvmlite\"}\n  ");
  fixed.replace(fixed.find("transform.apply_registered_pass(%h5) {pass = "
                           "\"finalize-memref-to-llvmlite\"}"),
                std::string("transform.apply_registered_pass(%h5) {pass = "
                            "\"finalize-memref-to-llvmlite\"}")
                    .size(),
                "transform.apply_registered_pass(%f2) {pass = "
                "\"finalize-memref-to-llvmlite\"}");
  auto fixed_parsed = parseTransform(fixed, f.ctx.transforms, f.ctx.payload);
  REQUIRE_MESSAGE(fixed_parsed.ok(), fixed_parsed.diags.str());
  StaticReport fixed_report = checkStatic(
      fixed_parsed.script->module, *fixed_parsed.script->sequence("transform_main"),
      OpSetExpr::parse("func.*, scf.*, arith.*, memref.*"),
      OpSetExpr::parse("llvmlite.*"), f.ctx.signatureResolver(), f.ctx.payload);
  CHECK(fixed_report.findings.empty());
}

TEST_CASE("phase ordering: loop transforms after convert-scf-to-cf are flagged") {
  Fixture f;
  const char *text = R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %m0 = structured.match(%root) {ops = ["builtin.module"]}
  %h1 = transform.apply_registered_pass(%m0) {pass = "convert-scf-to-cf"}
  %loops = structured.match(%root) {ops = ["scf.for"]}
  %o, %i = loop.tile(%loops) {sizes = [4]}
}
)";
  auto parsed = parseTransform(text, f.ctx.transforms, f.ctx.payload);
  REQUIRE_MESSAGE(parsed.ok(), parsed.diags.str());
  StaticReport report = checkStatic(
      parsed.script->module, *parsed.script->sequence("transform_main"),
      OpSetExpr::parse("func.*, scf.*, arith.*, memref.*"), OpSetExpr{},
      f.ctx.signatureResolver(), f.ctx.payload);
  bool phase = false;
  for (const auto &fd : report.findings)
    if (fd.kind == StaticFinding::Kind::PhaseOrdering &&
        fd.transform.find("loop.tile") != std::string::npos)
      phase = true;
  CHECK(phase);
}

TEST_CASE("dynamic condition checks catch a faulty expansion") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  const Pass *esm = f.ctx.passes.lookup("expand-strided-metadata");
  REQUIRE(esm != nullptr);
  // Before running: the dynamic-offset subview violates subview.constr, so a
  // module that skipped the expansion fails the after-check.
  auto diags = checkDynamic(m, esm->signature, CheckStage::After, f.ctx.payload,
                            f.ctx.constraints);
  bool constr_violation = false;
  for (const auto &d : diags)
    if (d.message.find("memref.subview") != std::string::npos)
      constr_violation = true;
  CHECK(constr_violation);

  // After a real run the after-check is clean (signatures are honest).
  auto s = f.runPass(m, "expand-strided-metadata");
  REQUIRE_MESSAGE(s.isOk(), s.message);
  auto after = checkDynamic(m, esm->signature, CheckStage::After, f.ctx.payload,
                            f.ctx.constraints);
  CHECK(after.empty());
}

TEST_CASE("verify_constrained checks operand group cardinalities") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  const ConstrainedOpDef *def = f.ctx.constraints.lookup("memref.subview.constr");
  REQUIRE(def != nullptr);
  walk(m.root, [&](const Operation &op) {
    if (op.name == "memref.subview")
      CHECK_FALSE(verifyConstrained(op, *def, f.ctx.payload)); // dynamic offset
    return true;
  });

  Module m2 = f.payload(R"(
func.func @g {
^bb0(%A: memref<8x8xf64>):
  %v = memref.subview(%A) {static_offsets = [0, 0], static_sizes = [4, 4], static_strides = [1, 1], segments = [1, 0, 0, 0]} : memref<4x4xf64, offset: 0, strides: [8, 1]>
  func.return
}
)");
  walk(m2.root, [&](const Operation &op) {
    if (op.name == "memref.subview")
      CHECK(verifyConstrained(op, *def, f.ctx.payload));
    return true;
  });
}

TEST_CASE("patterns: add_of_zero folds and retargets handles") {
  Fixture f;
  Module m = f.payload(R"(
func.func @g {
^bb0(%x: i64):
  %c0 = arith.constant {value = 0} : i64
  %y = arith.addi(%x, %c0)
  %z = arith.muli(%y, %y)
  func.return(%z)
}
)");
  Rewriter rw(m);
  auto r = applyPatternsGreedy(m, rw, m.root.id, {"add_of_zero"}, f.ctx.patterns,
                               f.ctx.payload);
  REQUIRE(r.ok);
  CHECK(r.rewrites == 1);
  CHECK(countOps(m, "arith.addi") == 0);
  // muli now consumes %x directly.
  walk(m.root, [&](const Operation &op) {
    if (op.name == "arith.muli") {
      CHECK(op.operands[0] == "x");
      CHECK(op.operands[1] == "x");
    }
    return true;
  });
  CHECK(verifyModule(m, f.ctx.payload).items.empty());
}

TEST_CASE("empty pattern list leaves the payload unchanged") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  Module before = m;
  Rewriter rw(m);
  auto r = applyPatternsGreedy(m, rw, m.root.id, {}, f.ctx.patterns, f.ctx.payload);
  REQUIRE(r.ok);
  CHECK(r.rewrites == 0);
  CHECK(structurallyEqual(m, before));
}

TEST_CASE("canonicalize pattern set is confluent on ordering") {
  Fixture f;
  const char *text = R"(
func.func @g {
^bb0(%x: i64):
  %c0 = arith.constant {value = 0} : i64
  %c1 = arith.constant {value = 1} : i64
  %c2 = arith.constant {value = 2} : i64
  %c3 = arith.constant {value = 3} : i64
  %a = arith.addi(%c2, %c3)
  %b = arith.muli(%a, %c1)
  %c = arith.addi(%b, %c0)
  %d = arith.muli(%c, %x)
  %e = arith.cmpi(%c2, %c3) {predicate = "slt"}
  func.return(%d, %e)
}
)";
  std::vector<std::string> names = canonicalizePatternNames();
  std::sort(names.begin(), names.end());
  std::optional<std::string> first_print;
  int permutations = 0;
  do {
    Module m = f.payload(text);
    Rewriter rw(m);
    auto r = applyPatternsGreedy(m, rw, m.root.id, names, f.ctx.patterns,
                                 f.ctx.payload);
    REQUIRE(r.ok);
    tfc_test::canonicalizeNames(m);
    std::string printed = printModule(m, f.ctx.payload);
    if (!first_print)
      first_print = printed;
    else
      CHECK(*first_print == printed);
    ++permutations;
  } while (std::next_permutation(names.begin(), names.end()) && permutations < 24);
  CHECK(permutations == 24);
}

TEST_CASE("regress_hoist_blocker strictly increases executed cost") {
  Fixture f;
  const char *text = R"(
func.func @g {
^bb0(%A: memref<8xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c8 = arith.constant {value = 8} : index
  %c2 = arith.constant {value = 2} : index
  %c3 = arith.constant {value = 3} : index
  %inv = arith.muli(%c2, %c3)
  scf.for(%c0, %c8, %c1) {
  ^b(%i: index):
    %v = memref.load(%A, %i)
    %w = arith.addi(%v, %inv)
    memref.store(%w, %A, %i)
    scf.yield
  }
  func.return
}
)";
  Module m = f.payload(text);
  BufferInit a;
  a.elem = TypeKind::I64;
  a.shape = {8};
  std::vector<ArgSpec> args = {ArgSpec::makeBuffer(a)};
  auto before = execute(m, f.ctx.payload, "g", args);
  REQUIRE(before.ok);

  Rewriter rw(m);
  auto r = applyPatternsGreedy(m, rw, m.root.id, {"regress_hoist_blocker"},
                               f.ctx.patterns, f.ctx.payload);
  REQUIRE(r.ok);
  CHECK(r.rewrites >= 1);
  auto after = execute(m, f.ctx.payload, "g", args);
  REQUIRE(after.ok);
  CHECK(execResultsEqualExact(before, after)); // semantics preserved
  CHECK(after.cost.weighted_cost > before.cost.weighted_cost);
}

TEST_CASE("instrument-accumulate clones the requested op kind") {
  Fixture f;
  Module m = f.payload(R"(
func.func @g {
^bb0(%x: i64, %y: i64):
  %a = arith.addi(%x, %y)
  %b = arith.muli(%a, %y)
  func.return(%b)
}
)");
  auto s = f.runPass(m, "instrument-accumulate", "op=arith.addi");
  REQUIRE_MESSAGE(s.isOk(), s.message);
  CHECK(countOps(m, "arith.addi") == 2);
  CHECK(verifyModule(m, f.ctx.payload).items.empty());

  // Missing option: pass-reported (silenceable) failure.
  auto missing = f.runPass(m, "instrument-accumulate");
  CHECK_FALSE(missing.isOk());
  CHECK(missing.kind == TransformStatusKind::Silenceable);
}

TEST_CASE("pipeline strings parse with nested anchors") {
  std::string err;
  auto pipe = parsePipeline(
      "builtin.module(convert-scf-to-cf, func.func(canonicalize, "
      "instrument-accumulate{op=arith.addi}), reconcile-unrealized-casts)",
      &err);
  REQUIRE_MESSAGE(pipe.has_value(), err);
  REQUIRE(pipe->size() == 4);
  CHECK((*pipe)[0].anchor == "builtin.module");
  CHECK((*pipe)[1].anchor == "func.func");
  CHECK((*pipe)[1].pass == "canonicalize");
  CHECK((*pipe)[2].anchor == "func.func");
  CHECK(*(*pipe)[2].options.get("op") == "arith.addi");
  CHECK((*pipe)[3].anchor == "builtin.module");

  CHECK(parsePipeline("", &err)->empty());
  CHECK_FALSE(parsePipeline("builtin.module(foo", &err).has_value());
}

TEST_CASE("unknown pass through the transform op is a definite error") {
  Fixture f;
  Module m = f.payload(kChunkDynamic);
  auto parsed = parseTransform(R"(
transform.named_sequence @transform_main {
^bb0(%root: !any):
  %m0 = structured.match(%root) {ops = ["builtin.module"]}
  %h = transform.apply_registered_pass(%m0) {pass = "no-such-pass"}
}
)",
                               f.ctx.transforms, f.ctx.payload);
  REQUIRE(parsed.ok());
  InterpResult r = f.ctx.apply(*parsed.script, m, {});
  REQUIRE_FALSE(r.ok);
  CHECK(r.error.severity == Severity::Definite);
}
