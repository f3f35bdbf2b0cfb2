// Payload IR: parsing, printing, verification, matching, rewriting.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tfc/executor.hpp"
#include "tfc/rewriter.hpp"
#include "tfc/text.hpp"

using namespace tfc;

namespace {

DialectRegistry &payloadRegistry() {
  static DialectRegistry reg = [] {
    DialectRegistry r;
    registerBuiltinDialects(r);
    return r;
  }();
  return reg;
}

Module parseOrDie(const std::string &text) {
  auto result = parsePayload(text, payloadRegistry());
  REQUIRE_MESSAGE(result.ok(), result.diags.str());
  return std::move(*result.module);
}

const char *kChunkTo42Static = R"(
func.func @chunkTo42 {
^bb0(%A: memref<64x64xf64>):
  %c42 = arith.constant {value = 42.0} : f64
  %c4a = arith.constant {value = 4} : index
  %c4b = arith.constant {value = 4} : index
  %view = memref.subview(%A) {static_offsets = [16, 8], static_sizes = [4, 4], static_strides = [1, 1], segments = [1, 0, 0, 0]} : memref<4x4xf64, offset: 1032, strides: [64, 1]>
  scf.forall(%c4a, %c4b) {
  ^bb1(%fi: index, %fj: index):
    memref.store(%c42, %view, %fi, %fj)
    scf.yield
  }
  func.return
}
)";

} // namespace

TEST_CASE("minimal program parses") {
  Module m = parseOrDie("func.func @f { func.return }");
  int funcs = 0, ops = 0;
  walk(m.root, [&](const Operation &op) {
    if (op.name == "func.func")
      ++funcs;
    if (op.name != "builtin.module")
      ++ops;
    return true;
  });
  CHECK(funcs == 1);
  CHECK(ops == 2);
}

TEST_CASE("empty module prints canonically") {
  Module m = parseOrDie("builtin.module { }");
  CHECK(printModule(m, payloadRegistry()) == "builtin.module { }\n");
}

TEST_CASE("chunkTo42 parses with the expected op set") {
  Module m = parseOrDie(kChunkTo42Static);
  std::set<std::string> names;
  walk(m.root, [&](const Operation &op) {
    names.insert(op.name);
    return true;
  });
  CHECK(names == std::set<std::string>{"builtin.module", "func.func",
                                       "arith.constant", "memref.subview",
                                       "scf.forall", "memref.store", "scf.yield",
                                       "func.return"});
}

TEST_CASE("round trip is structurally the identity") {
  Module m = parseOrDie(kChunkTo42Static);
  std::string printed = printModule(m, payloadRegistry());
  Module m2 = parseOrDie(printed);
  CHECK(structurallyEqual(m, m2));
  CHECK(printModule(m2, payloadRegistry()) == printed);
}

TEST_CASE("self-referencing operand is a dominance error") {
  auto result = parsePayload("func.func @f { %x = arith.addi(%x, %x)\nfunc.return }",
                             payloadRegistry());
  CHECK_FALSE(result.ok());
  bool found = false;
  for (const auto &d : result.diags.items)
    if (d.message.find("dominate") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("unknown op is rejected") {
  auto result = parsePayload("func.func @f { gpu.launch\nfunc.return }",
                             payloadRegistry());
  CHECK_FALSE(result.ok());
}

TEST_CASE("scf.for region with two blocks is rejected") {
  const char *text = R"(
func.func @f {
^bb0(%n: index):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  scf.for(%c0, %n, %c1) {
  ^bb1(%i: index):
    scf.yield
  ^bb2:
    scf.yield
  }
  func.return
}
)";
  auto result = parsePayload(text, payloadRegistry());
  CHECK_FALSE(result.ok());
}

TEST_CASE("segment size mismatch is rejected") {
  const char *text = R"(
func.func @f {
^bb0(%A: memref<8x8xf64>):
  %v = memref.subview(%A) {static_offsets = [0, 0], static_sizes = [4, 4], static_strides = [1, 1], segments = [1, 1, 0, 0]} : memref<4x4xf64>
  func.return
}
)";
  auto result = parsePayload(text, payloadRegistry());
  CHECK_FALSE(result.ok());
}

TEST_CASE("match_ops walks preorder") {
  const char *text = R"(
func.func @f {
^bb0(%n: index):
  %c0 = arith.constant {value = 0} : index
  %c1 = arith.constant {value = 1} : index
  scf.for(%c0, %n, %c1) {
  ^bb1(%i: index):
    scf.for(%c0, %n, %c1) {
    ^bb2(%j: index):
      scf.yield
    }
    scf.yield
  }
  func.return
}
)";
  Module m = parseOrDie(text);
  auto loops = matchOps(m, m.root.id, OpSetExpr::parse("scf.for"), payloadRegistry());
  REQUIRE(loops.size() == 2);
  const Operation *outer = findOp(m, loops[0]);
  REQUIRE(outer != nullptr);
  CHECK(contains(*outer, loops[1]));

  CHECK(matchOps(m, m.root.id, OpSetExpr::parse("gpu.*"), payloadRegistry()).empty());
  auto traits = matchOps(m, m.root.id, OpSetExpr::parse("interface:loop_like"),
                         payloadRegistry());
  CHECK(traits.size() == 2);
}

TEST_CASE("match memref.* in chunkTo42") {
  Module m = parseOrDie(kChunkTo42Static);
  auto ids = matchOps(m, m.root.id, OpSetExpr::parse("memref.*"), payloadRegistry());
  REQUIRE(ids.size() == 2);
  CHECK(findOp(m, ids[0])->name == "memref.subview");
  CHECK(findOp(m, ids[1])->name == "memref.store");
}

TEST_CASE("rewrite events fire once per mutation") {
  Module m = parseOrDie("func.func @f { %c = arith.constant {value = 1} : index\nfunc.return }");
  OpId cst = matchOps(m, m.root.id, OpSetExpr::parse("arith.constant"),
                      payloadRegistry())[0];
  std::vector<RewriteEvent> events;
  Rewriter rw(m);
  rw.addListener([&](const RewriteEvent &e) { events.push_back(e); });

  SUBCASE("erase fires one erased event") {
    CHECK(rw.erase(cst));
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == RewriteEvent::Kind::Erased);
    CHECK(events[0].old_op == cst);
    CHECK(findOp(m, cst) == nullptr);
  }

  SUBCASE("replace fires one replaced event with the new ids") {
    Operation a;
    a.id = m.newOpId();
    a.name = "arith.constant";
    a.attrs["value"] = AttrValue::makeInt(2);
    a.results.push_back({m.freshValueName(), Type::index()});
    Operation b = a;
    b.id = m.newOpId();
    b.results[0].name = m.freshValueName();
    auto ids = rw.replace(cst, {a, b});
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == RewriteEvent::Kind::Replaced);
    CHECK(events[0].new_ops == ids);
    CHECK(rw.mutationCount() == rw.eventCount());
  }
}

TEST_CASE("batch edits referencing dead ops are a definite error") {
  Module m = parseOrDie("func.func @f { %c = arith.constant {value = 1} : index\nfunc.return }");
  OpId cst = matchOps(m, m.root.id, OpSetExpr::parse("arith.constant"),
                      payloadRegistry())[0];
  std::vector<Edit> edits;
  edits.push_back({Edit::Kind::Erase, cst, {}});
  edits.push_back({Edit::Kind::Erase, cst, {}});
  Module copy = m;
  auto err = applyEdits(copy, std::move(edits), {});
  REQUIRE(err.has_value());
  CHECK(err->severity == Severity::Definite);
  CHECK(structurallyEqual(copy, m)); // atomic: nothing applied
}

TEST_CASE("plugin dialect round trips") {
  DialectRegistry reg;
  registerBuiltinDialects(reg);
  auto diags = loadPluginDialect(
      reg, "opdef {name = \"mylib.matmul\", operands = 3, results = 1, "
           "result_type = \"clause\", traits = [\"memory_read\", \"memory_write\"]}");
  REQUIRE_MESSAGE(!diags.hasErrors(), diags.str());
  const char *text = R"(
func.func @f {
^bb0(%a: memref<2x2xf64>, %b: memref<2x2xf64>, %c: memref<2x2xf64>):
  %r = mylib.matmul(%a, %b, %c) : i64
  func.return
}
)";
  auto result = parsePayload(text, reg);
  REQUIRE_MESSAGE(result.ok(), result.diags.str());
  std::string printed = printModule(*result.module, reg);
  auto again = parsePayload(printed, reg);
  REQUIRE(again.ok());
  CHECK(structurallyEqual(*result.module, *again.module));
}

TEST_CASE("duplicate dialect registration fails") {
  DialectRegistry reg;
  registerBuiltinDialects(reg);
  OpDefinition dup;
  dup.name = "arith.addi";
  auto diags = reg.registerDialect({dup});
  CHECK(diags.hasErrors());
}

TEST_CASE("op_in_set basics") {
  auto &reg = payloadRegistry();
  CHECK(opInSet("scf.for", OpSetExpr::parse("scf.*"), reg));
  CHECK_FALSE(opInSet("arith.addi", OpSetExpr::parse("scf.*"), reg));
  CHECK(opInSet("scf.for", OpSetExpr::parse("interface:loop_like"), reg));
  CHECK(opInSet("memref.subview", OpSetExpr::parse("memref.subview.constr"), reg));

  // Wildcards subsume every exact atom of the dialect.
  for (const auto &[name, def] : reg.all()) {
    OpSetExpr wild = OpSetExpr::parse(def.name.substr(0, def.name.find('.')) + ".*");
    CHECK(opInSet(name, wild, reg));
  }
}
