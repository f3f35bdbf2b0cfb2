// Reference interpreter: semantics, determinism, and the cost model.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "generators.hpp"
#include "tfc/context.hpp"
#include "tfc/text.hpp"

#include <fstream>

using namespace tfc;

namespace {

struct Fixture {
  Context ctx = Context::standard();

  Module payload(const std::string &text) {
    auto r = parsePayload(text, ctx.payload);
    REQUIRE_MESSAGE(r.ok(), r.diags.str());
    return std::move(*r.module);
  }

  Module payloadFile(const std::string &name) {
    std::ifstream in(std::string(TFC_TEST_DATA_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return payload(ss.str());
  }
};

} // namespace

TEST_CASE("chunkTo42 sets exactly the 4x4 view cells") {
  Fixture f;
  Module m = f.payloadFile("chunk_to_42.pir");
  BufferInit a;
  a.elem = TypeKind::F64;
  a.shape = {64, 64};
  auto r = execute(m, f.ctx.payload, "chunkTo42", {ArgSpec::makeBuffer(a)});
  REQUIRE_MESSAGE(r.ok, r.error.message);
  int cells = 0;
  for (double v : r.arg_buffers[0].f64)
    if (v == 42.0)
      ++cells;
  CHECK(cells == 16);
  CHECK(r.arg_buffers[0].f64[16 * 64 + 8] == 42.0);
  CHECK(r.arg_buffers[0].f64[0] == 0.0);
}

TEST_CASE("dynamic chunkTo42 honors the offset argument") {
  Fixture f;
  Module m = f.payloadFile("chunk_to_42_dynamic.pir");
  BufferInit a;
  a.elem = TypeKind::F64;
  a.shape = {64, 64};
  auto r = execute(m, f.ctx.payload, "chunkTo42",
                   {ArgSpec::makeBuffer(a), ArgSpec::makeInt(0)});
  REQUIRE(r.ok);
  CHECK(r.arg_buffers[0].f64[0 * 64 + 8] == 42.0);
  CHECK(r.arg_buffers[0].f64[3 * 64 + 11] == 42.0);
  int cells = 0;
  for (double v : r.arg_buffers[0].f64)
    if (v == 42.0)
      ++cells;
  CHECK(cells == 16);
}

TEST_CASE("all-ones matmul gives C = K everywhere") {
  Fixture f;
  tfc_test::PayloadGen gen(1);
  tfc_test::GenPayload p = gen.matmul(2, 4, 4, 4, /*f64=*/true);
  Module m = f.payload(p.text);
  for (auto &arg : p.args)
    arg.buffer.fill = BufferInit::Fill::Ones;
  p.args[2].buffer.fill = BufferInit::Fill::Zeros;
  auto r = execute(m, f.ctx.payload, "main", p.args);
  REQUIRE_MESSAGE(r.ok, r.error.message);
  for (double v : r.arg_buffers[2].f64)
    CHECK(v == 4.0);
}

TEST_CASE("execution is deterministic including the cost report") {
  Fixture f;
  tfc_test::PayloadGen gen(7);
  tfc_test::GenOptions opt;
  opt.allow_if = true;
  tfc_test::GenPayload p = gen.generate(opt);
  Module m = f.payload(p.text);
  auto r1 = execute(m, f.ctx.payload, "main", p.args);
  auto r2 = execute(m, f.ctx.payload, "main", p.args);
  REQUIRE(r1.ok);
  REQUIRE(r2.ok);
  CHECK(execResultsEqualExact(r1, r2));
  CHECK(r1.cost.ops_executed == r2.cost.ops_executed);
  CHECK(r1.cost.weighted_cost == r2.cost.weighted_cost);
  CHECK(r1.cost.per_op == r2.cost.per_op);
}

TEST_CASE("cost weights, vector width and kernel alpha") {
  Fixture f;
  const char *text = R"(
func.func @main {
^bb0(%A: memref<8xf64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %c8 = arith.constant {value = 8} : index
  %k = arith.constant {value = 2.0} : f64
  scf.for(%c0, %c8, %c1) {vectorized = true} {
  ^b(%i: index):
    %v = memref.load(%A, %i)
    %m = arith.mulf(%v, %k)
    %a = arith.addf(%m, %k)
    memref.store(%a, %A, %i)
    scf.yield
  }
  func.return
}
)";
  Module m = f.payload(text);
  BufferInit a;
  a.elem = TypeKind::F64;
  a.shape = {8};
  std::vector<ArgSpec> args = {ArgSpec::makeBuffer(a)};

  ExecOptions w1;
  w1.cost.vector_width = 1;
  auto r1 = execute(m, f.ctx.payload, "main", args, w1);
  ExecOptions w8;
  w8.cost.vector_width = 8;
  auto r8 = execute(m, f.ctx.payload, "main", args, w8);
  REQUIRE(r1.ok);
  REQUIRE(r8.ok);
  // Vectorization is semantics-neutral but cheaper under the cost model.
  CHECK(execResultsEqualExact(r1, r8));
  CHECK(r8.cost.weighted_cost < r1.cost.weighted_cost);
  // width 1: every op costs its weight; 8 loop iterations x 2 arith ops
  // discounted by 8 => the arith contribution shrinks from 16 toward 2.
  CHECK(r1.cost.weighted_cost - r8.cost.weighted_cost == doctest::Approx(14));

  ExecOptions weighted;
  weighted.cost.weights["memref.store"] = 10.0;
  auto rw = execute(m, f.ctx.payload, "main", args, weighted);
  REQUIRE(rw.ok);
  CHECK(rw.cost.weighted_cost > r8.cost.weighted_cost);
}

TEST_CASE("lib.call_kernel matches the naive nest and costs alpha*b*m*n*k") {
  Fixture f;
  const char *text = R"(
func.func @main {
^bb0(%A: memref<4x4xf64>, %B: memref<4x4xf64>, %C: memref<4x4xf64>):
  %c0 = arith.constant {value = 0} : index
  lib.call_kernel(%A, %B, %C, %c0, %c0, %c0) {kernel = "k4", m = 4, n = 4, k = 4, segments = [1, 1, 1, 0, 1, 1, 1]}
  func.return
}
)";
  Module m = f.payload(text);
  auto mk = [&](BufferInit::Fill fill) {
    BufferInit b;
    b.elem = TypeKind::F64;
    b.shape = {4, 4};
    b.fill = fill;
    return ArgSpec::makeBuffer(b);
  };
  std::vector<ArgSpec> args = {mk(BufferInit::Fill::Iota), mk(BufferInit::Fill::Iota),
                               mk(BufferInit::Fill::Zeros)};
  auto r = execute(m, f.ctx.payload, "main", args);
  REQUIRE_MESSAGE(r.ok, r.error.message);

  // Reference: naive nest on the same inputs.
  tfc_test::PayloadGen gen(3);
  tfc_test::GenPayload naive = gen.matmul(1, 4, 4, 4, true, /*batched=*/false);
  Module nm = f.payload(naive.text);
  auto rn = execute(nm, f.ctx.payload, "main", args);
  REQUIRE(rn.ok);
  CHECK(buffersClose(r.arg_buffers[2], rn.arg_buffers[2], 1e-12));

  // Cost: alpha * 4*4*4 plus the weight-1 ops around the call.
  CHECK(r.cost.per_op.at("lib.call_kernel") == 1);
  CHECK(r.cost.weighted_cost ==
        doctest::Approx(0.05 * 64 + 2 /*constant + return*/));
}

TEST_CASE("out-of-bounds access is a definite error") {
  Fixture f;
  const char *text = R"(
func.func @main {
^bb0(%A: memref<4xf64>):
  %c9 = arith.constant {value = 9} : index
  %v = memref.load(%A, %c9)
  func.return
}
)";
  Module m = f.payload(text);
  BufferInit a;
  a.elem = TypeKind::F64;
  a.shape = {4};
  auto r = execute(m, f.ctx.payload, "main", {ArgSpec::makeBuffer(a)});
  REQUIRE_FALSE(r.ok);
  CHECK(r.error.severity == Severity::Definite);
  CHECK(r.error.message.find("out of bounds") != std::string::npos);
}

TEST_CASE("step limit guards nontermination") {
  Fixture f;
  const char *text = R"(
func.func @main {
^bb0(%A: memref<4xi64>):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  %cbig = arith.constant {value = 1000000} : index
  scf.for(%c0, %cbig, %c1) {
  ^b(%i: index):
    scf.yield
  }
  func.return
}
)";
  Module m = f.payload(text);
  BufferInit a;
  a.elem = TypeKind::I64;
  a.shape = {4};
  ExecOptions opts;
  opts.step_limit = 1000;
  auto r = execute(m, f.ctx.payload, "main", {ArgSpec::makeBuffer(a)}, opts);
  REQUIRE_FALSE(r.ok);
  CHECK(r.error.message.find("step limit") != std::string::npos);
}

TEST_CASE("unknown ops in the executable subset are definite errors") {
  Fixture f;
  DialectRegistry reg;
  registerBuiltinDialects(reg);
  loadPluginDialect(reg, "opdef {name = \"mylib.mystery\", operands = 0, results = 0}");
  auto parsed = parsePayload("func.func @main {\nmylib.mystery\nfunc.return\n}", reg);
  REQUIRE(parsed.ok());
  auto r = execute(*parsed.module, reg, "main", {});
  REQUIRE_FALSE(r.ok);
  CHECK(r.error.message.find("executable subset") != std::string::npos);
}

TEST_CASE("fully lowered llvmlite programs execute") {
  Fixture f;
  Module m = f.payloadFile("chunk_to_42_dynamic.pir");
  Module original = m;
  std::string err;
  auto pipe = parsePipeline(
      "builtin.module(convert-scf-to-cf, convert-arith-to-llvmlite, "
      "convert-cf-to-llvmlite, convert-func-to-llvmlite, expand-strided-metadata, "
      "lower-affine, convert-arith-to-llvmlite, finalize-memref-to-llvmlite, "
      "reconcile-unrealized-casts)",
      &err);
  REQUIRE(pipe.has_value());
  auto s = runPipelineDirect(m, *pipe, f.ctx.passes, f.ctx.payload, &f.ctx.patterns);
  REQUIRE_MESSAGE(s.isOk(), s.message);
  BufferInit a;
  a.elem = TypeKind::F64;
  a.shape = {64, 64};
  std::vector<ArgSpec> args = {ArgSpec::makeBuffer(a), ArgSpec::makeInt(11)};
  auto before = execute(original, f.ctx.payload, "chunkTo42", args);
  auto after = execute(m, f.ctx.payload, "chunkTo42", args);
  REQUIRE(before.ok);
  REQUIRE_MESSAGE(after.ok, after.error.message);
  CHECK(execResultsEqualExact(before, after));
}

TEST_CASE("arg spec parsing") {
  auto i = parseArgSpec("42");
  REQUIRE(i.has_value());
  CHECK(i->kind == ArgSpec::Kind::Int);
  auto fl = parseArgSpec("2.5");
  REQUIRE(fl.has_value());
  CHECK(fl->kind == ArgSpec::Kind::Float);
  auto b = parseArgSpec("f64[4x4]:ones");
  REQUIRE(b.has_value());
  CHECK(b->buffer.shape == std::vector<std::int64_t>{4, 4});
  CHECK(b->buffer.fill == BufferInit::Fill::Ones);
  auto v = parseArgSpec("i64[2]=7,9");
  REQUIRE(v.has_value());
  CHECK(v->buffer.values == std::vector<double>{7, 9});
  CHECK_FALSE(parseArgSpec("f64[oops").has_value());
}
