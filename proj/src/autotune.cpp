//===- autotune.cpp - Constrained search over script parameters -----------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/autotune.hpp"
#include "tfc/text.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace tfc {

//===----------------------------------------------------------------------===//
// Constraint expressions
//===----------------------------------------------------------------------===//

namespace {

struct ExprParser {
  const std::string &s;
  const Assignment &env;
  size_t pos = 0;
  std::string error;

  bool failed() const { return !error.empty(); }
  void fail(const std::string &msg) {
    if (error.empty())
      error = msg + " in '" + s + "'";
  }

  void skip() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t'))
      ++pos;
  }
  bool eat(const char *tok) {
    skip();
    size_t len = std::string(tok).size();
    if (s.compare(pos, len, tok) == 0) {
      pos += len;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }

  std::int64_t primary() {
    skip();
    if (pos >= s.size()) {
      fail("unexpected end of expression");
      return 0;
    }
    char c = s[pos];
    if (c == '(') {
      ++pos;
      std::int64_t v = orExpr();
      if (!eat(")"))
        fail("missing ')'");
      return v;
    }
    if (c == '!') {
      ++pos;
      return primary() == 0 ? 1 : 0;
    }
    if (c == '-') {
      ++pos;
      return -primary();
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
      return std::strtoll(s.substr(start, pos - start).c_str(), nullptr, 10);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                                s[pos] == '_'))
        ++pos;
      std::string name = s.substr(start, pos - start);
      if (name == "where") {
        if (!eat("("))
          fail("where needs '('");
        std::int64_t cond = orExpr();
        if (!eat(","))
          fail("where needs two arguments");
        std::int64_t then = orExpr();
        if (!eat(")"))
          fail("missing ')' after where");
        // Conditional constraint: cond implies then.
        return cond != 0 ? then : 1;
      }
      auto it = env.find(name);
      if (it == env.end()) {
        fail("unknown name '" + name + "'");
        return 0;
      }
      return it->second;
    }
    fail(std::string("unexpected character '") + c + "'");
    ++pos;
    return 0;
  }

  std::int64_t mulExpr() {
    std::int64_t v = primary();
    while (!failed()) {
      skip();
      if (eat("*")) {
        v *= primary();
      } else if (peek() == '%') {
        ++pos;
        std::int64_t rhs = primary();
        if (rhs == 0) {
          fail("modulo by zero");
          return 0;
        }
        v %= rhs;
      } else {
        break;
      }
    }
    return v;
  }

  std::int64_t addExpr() {
    std::int64_t v = mulExpr();
    while (!failed()) {
      skip();
      if (pos < s.size() && s[pos] == '+') {
        ++pos;
        v += mulExpr();
      } else if (pos < s.size() && s[pos] == '-') {
        ++pos;
        v -= mulExpr();
      } else {
        break;
      }
    }
    return v;
  }

  std::int64_t cmpExpr() {
    std::int64_t v = addExpr();
    while (!failed()) {
      skip();
      if (eat("==")) {
        v = v == addExpr();
      } else if (eat("!=")) {
        v = v != addExpr();
      } else if (eat("<=")) {
        v = v <= addExpr();
      } else if (eat(">=")) {
        v = v >= addExpr();
      } else if (peek() == '<') {
        ++pos;
        v = v < addExpr();
      } else if (peek() == '>') {
        ++pos;
        v = v > addExpr();
      } else {
        break;
      }
    }
    return v;
  }

  std::int64_t andExpr() {
    std::int64_t v = cmpExpr();
    while (!failed() && eat("&&"))
      v = (v != 0) & (cmpExpr() != 0);
    return v;
  }

  std::int64_t orExpr() {
    std::int64_t v = andExpr();
    while (!failed() && eat("||"))
      v = (v != 0) | (andExpr() != 0);
    return v;
  }
};

} // namespace

std::optional<std::int64_t> evalConstraintExpr(const std::string &expr,
                                               const Assignment &env,
                                               std::string *error) {
  ExprParser p{expr, env, 0, {}};
  std::int64_t v = p.orExpr();
  p.skip();
  if (!p.failed() && p.pos != expr.size())
    p.fail("trailing characters");
  if (p.failed()) {
    if (error)
      *error = p.error;
    return std::nullopt;
  }
  return v;
}

bool feasible(const ParamSpace &space, const Assignment &assignment,
              DiagnosticList *diags) {
  Assignment env = space.dims;
  for (const auto &[k, v] : assignment)
    env[k] = v;
  for (const auto &p : space.params) {
    auto it = assignment.find(p.name);
    if (it == assignment.end()) {
      if (diags)
        diags->error("assignment does not cover parameter '" + p.name + "'");
      return false;
    }
    if (it->second < p.lo || it->second > p.hi)
      return false;
    for (const auto &c : p.constraints) {
      std::string err;
      auto v = evalConstraintExpr(c, env, &err);
      if (!v) {
        if (diags)
          diags->error(err);
        return false;
      }
      if (*v == 0)
        return false;
    }
  }
  return true;
}

//===----------------------------------------------------------------------===//
// Space file parsing
//===----------------------------------------------------------------------===//

namespace {

struct SpaceCursor {
  const std::string &s;
  size_t pos = 0;
  DiagnosticList &diags;
  const std::string &file;

  void skip() {
    while (pos < s.size()) {
      char c = s[pos];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else if (c == '/' && pos + 1 < s.size() && s[pos + 1] == '/') {
        while (pos < s.size() && s[pos] != '\n')
          ++pos;
      } else {
        break;
      }
    }
  }
  bool eat(const char *tok) {
    skip();
    size_t len = std::string(tok).size();
    if (s.compare(pos, len, tok) == 0) {
      pos += len;
      return true;
    }
    return false;
  }
  bool expect(const char *tok) {
    if (eat(tok))
      return true;
    diags.error(std::string("expected '") + tok + "'", {lineAt(), 1}, file);
    return false;
  }
  int lineAt() const {
    int line = 1;
    for (size_t i = 0; i < pos && i < s.size(); ++i)
      if (s[i] == '\n')
        ++line;
    return line;
  }
  std::string ident() {
    skip();
    std::string out;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                              s[pos] == '_'))
      out += s[pos++];
    return out;
  }
  // Raw text until a top-level (bracket-balanced) ',' or ']' — for
  // constraint expressions.
  std::string rawUntilDelim() {
    skip();
    std::string out;
    int depth = 0;
    while (pos < s.size()) {
      char c = s[pos];
      if ((c == ',' || c == ']') && depth == 0)
        break;
      if (c == '(' || c == '[')
        ++depth;
      if (c == ')' || c == ']')
        --depth;
      out += c;
      ++pos;
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '\n'))
      out.pop_back();
    return out;
  }
};

} // namespace

SpaceParseResult parseSpaceFile(const std::string &text,
                                const std::string &filename) {
  SpaceParseResult result;
  ParamSpace space;
  SpaceCursor c{text, 0, result.diags, filename};

  while (true) {
    c.skip();
    if (c.pos >= text.size())
      break;
    if (c.eat("dimensions")) {
      if (!c.expect("{"))
        return result;
      while (!c.eat("}")) {
        std::string name = c.ident();
        if (name.empty() || !c.expect("="))
          return result;
        std::string raw = c.rawUntilDelim();
        auto v = evalConstraintExpr(raw, space.dims);
        if (!v) {
          result.diags.error("malformed dimension value '" + raw + "'",
                             {c.lineAt(), 1}, filename);
          return result;
        }
        space.dims[name] = *v;
        c.eat(",");
      }
    } else if (c.eat("tuning_parameters")) {
      c.eat(":");
      if (!c.expect("["))
        return result;
      while (!c.eat("]")) {
        TuneParamDef def;
        def.name = c.ident();
        if (def.name.empty() || !c.expect(":") || !c.expect("{"))
          return result;
        while (!c.eat("}")) {
          std::string key = c.ident();
          if (!c.expect(":"))
            return result;
          if (key == "range") {
            if (!c.expect("["))
              return result;
            std::string lo_raw = c.rawUntilDelim();
            if (!c.expect(","))
              return result;
            std::string hi_raw = c.rawUntilDelim();
            if (!c.expect("]"))
              return result;
            auto lo = evalConstraintExpr(lo_raw, space.dims);
            auto hi = evalConstraintExpr(hi_raw, space.dims);
            if (!lo || !hi) {
              result.diags.error("malformed range for '" + def.name + "'",
                                 {c.lineAt(), 1}, filename);
              return result;
            }
            def.lo = *lo;
            def.hi = *hi;
          } else if (key == "constraints") {
            if (!c.expect("["))
              return result;
            while (!c.eat("]")) {
              def.constraints.push_back(c.rawUntilDelim());
              c.eat(",");
            }
          } else {
            result.diags.error("unknown key '" + key + "'", {c.lineAt(), 1},
                               filename);
            return result;
          }
          c.eat(",");
        }
        space.params.push_back(std::move(def));
        c.eat(",");
      }
    } else {
      result.diags.error("expected 'dimensions' or 'tuning_parameters'",
                         {c.lineAt(), 1}, filename);
      return result;
    }
  }
  // Constraint sanity: every referenced name resolves.
  Assignment probe = space.dims;
  for (const auto &p : space.params)
    probe[p.name] = p.lo;
  for (const auto &p : space.params)
    for (const auto &expr : p.constraints) {
      std::string err;
      if (!evalConstraintExpr(expr, probe, &err))
        result.diags.error(err, {}, filename);
    }
  if (result.diags.hasErrors())
    return result;
  result.space = std::move(space);
  return result;
}

//===----------------------------------------------------------------------===//
// Tuning
//===----------------------------------------------------------------------===//

std::set<std::string> templateParams(const std::string &text) {
  std::set<std::string> names;
  for (size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] == '$' && text[i + 1] == '{') {
      size_t close = text.find('}', i);
      if (close != std::string::npos)
        names.insert(text.substr(i + 2, close - i - 2));
    }
  }
  return names;
}

std::optional<TuneStrategy> tuneStrategyByName(const std::string &name) {
  if (name == "exhaustive")
    return TuneStrategy::Exhaustive;
  if (name == "random")
    return TuneStrategy::Random;
  if (name == "coorddesc")
    return TuneStrategy::CoordDesc;
  return std::nullopt;
}

namespace {

std::string substituteTemplate(const std::string &text, const Assignment &values) {
  std::string out;
  for (size_t i = 0; i < text.size();) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      size_t close = text.find('}', i);
      if (close != std::string::npos) {
        std::string name = text.substr(i + 2, close - i - 2);
        auto it = values.find(name);
        if (it != values.end()) {
          out += std::to_string(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

std::string assignmentKey(const Assignment &a) {
  std::string s;
  for (const auto &[k, v] : a)
    s += k + "=" + std::to_string(v) + ";";
  return s;
}

struct TuneEngine {
  const std::string &tmpl;
  const ParamSpace &space;
  const Module &module;
  const Context &ctx;
  const TuneRequest &req;
  TuneResult &result;
  std::map<std::string, double> cache;

  double evaluate(const Assignment &a, bool &hard_error) {
    std::string key = assignmentKey(a);
    if (auto it = cache.find(key); it != cache.end())
      return it->second;
    if (result.evaluations >= req.budget)
      return std::numeric_limits<double>::infinity();
    ++result.evaluations;

    Assignment values = space.dims;
    for (const auto &[k, v] : a)
      values[k] = v;
    std::string text = substituteTemplate(tmpl, values);
    double cost = std::numeric_limits<double>::infinity();
    auto parsed = parseTransform(text, ctx.transforms, ctx.payload);
    if (!parsed.ok()) {
      result.error = "template does not parse after substitution:\n" +
                     parsed.diags.str();
      hard_error = true;
      return cost;
    }
    Module clone = module;
    InterpResult ir = ctx.apply(*parsed.script, clone, req.interp);
    if (ir.ok) {
      ExecResult ex = execute(clone, ctx.payload, req.entry, req.args, req.exec);
      if (ex.ok)
        cost = ex.cost.weighted_cost;
    } else if (ir.error.severity == Severity::Definite) {
      result.error = "definite interpreter error during evaluation: " +
                     ir.error.message;
      hard_error = true;
      return cost;
    }
    // Silenceable failures score +infinity.
    cache[key] = cost;
    double best = result.trace.empty()
                      ? cost
                      : std::min(result.trace.back().best_so_far, cost);
    result.trace.push_back({a, cost, best});
    if (result.best.empty() || cost < result.best_cost) {
      result.best = a;
      result.best_cost = cost;
    }
    return cost;
  }

  bool budgetLeft() const { return result.evaluations < req.budget; }

  // Deterministic enumeration of all feasible assignments in declaration
  // order (lexicographic).
  template <typename Fn> void enumerate(Fn &&fn) {
    Assignment a;
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
      if (i == space.params.size())
        return feasible(space, a) ? fn(a) : true;
      const TuneParamDef &p = space.params[i];
      for (std::int64_t v = p.lo; v <= p.hi; ++v) {
        a[p.name] = v;
        if (!rec(i + 1))
          return false;
      }
      a.erase(p.name);
      return true;
    };
    rec(0);
  }

  std::optional<Assignment> randomFeasible(std::mt19937_64 &rng) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      Assignment a;
      for (const auto &p : space.params) {
        std::uniform_int_distribution<std::int64_t> dist(p.lo, p.hi);
        a[p.name] = dist(rng);
      }
      if (feasible(space, a))
        return a;
    }
    return std::nullopt;
  }

  void runExhaustive() {
    bool hard_error = false;
    enumerate([&](const Assignment &a) {
      evaluate(a, hard_error);
      return !hard_error && budgetLeft();
    });
  }

  void runRandom() {
    std::mt19937_64 rng(req.seed);
    bool hard_error = false;
    int stale = 0;
    while (budgetLeft() && !hard_error && stale < 100000) {
      auto a = randomFeasible(rng);
      if (!a) {
        if (result.trace.empty())
          result.error = "no feasible assignment found by sampling";
        return;
      }
      // Duplicates hit the cache for free; resample, bounded in case the
      // whole space has been visited already.
      if (cache.count(assignmentKey(*a))) {
        ++stale;
        continue;
      }
      stale = 0;
      evaluate(*a, hard_error);
    }
  }

  void runCoordDesc() {
    std::mt19937_64 rng(req.seed);
    bool hard_error = false;
    // Deterministic start: the first feasible assignment.
    std::optional<Assignment> start;
    enumerate([&](const Assignment &a) {
      start = a;
      return false;
    });
    if (!start) {
      result.error = "the space has no feasible assignment";
      return;
    }
    Assignment cur = *start;
    double cur_cost = evaluate(cur, hard_error);
    while (budgetLeft() && !hard_error) {
      bool improved = false;
      for (const auto &p : space.params) {
        if (!budgetLeft() || hard_error)
          break;
        // Nearest feasible neighbors along this coordinate.
        auto try_move = [&](std::int64_t dir) {
          Assignment cand = cur;
          for (std::int64_t v = cur.at(p.name) + dir; v >= p.lo && v <= p.hi;
               v += dir) {
            cand[p.name] = v;
            if (feasible(space, cand)) {
              double c = evaluate(cand, hard_error);
              if (c < cur_cost) {
                cur = cand;
                cur_cost = c;
                improved = true;
              }
              return;
            }
          }
        };
        try_move(+1);
        try_move(-1);
      }
      if (!improved) {
        // Converged; restart from a random feasible point while budget lasts.
        auto a = randomFeasible(rng);
        if (!a)
          return;
        if (cache.count(assignmentKey(*a)))
          continue;
        cur = *a;
        cur_cost = evaluate(cur, hard_error);
      }
    }
  }
};

} // namespace

TuneResult tune(const std::string &script_template, const ParamSpace &space,
                const Module &module, const Context &ctx, const TuneRequest &req) {
  TuneResult result;
  result.best_cost = std::numeric_limits<double>::infinity();

  std::set<std::string> tmpl_params = templateParams(script_template);
  std::set<std::string> space_params;
  for (const auto &p : space.params)
    space_params.insert(p.name);
  for (const auto &name : tmpl_params)
    if (!space_params.count(name) && !space.dims.count(name)) {
      result.error = "template parameter '${" + name + "}' is not in the space";
      return result;
    }
  for (const auto &name : space_params)
    if (!tmpl_params.count(name)) {
      result.error = "space parameter '" + name + "' is unused by the template";
      return result;
    }
  if (req.budget < 1) {
    result.error = "budget must be at least 1";
    return result;
  }

  TuneEngine engine{script_template, space, module, ctx, req, result, {}};
  switch (req.strategy) {
  case TuneStrategy::Exhaustive:
    engine.runExhaustive();
    break;
  case TuneStrategy::Random:
    engine.runRandom();
    break;
  case TuneStrategy::CoordDesc:
    engine.runCoordDesc();
    break;
  }
  if (!result.error.empty())
    return result;
  if (result.trace.empty()) {
    result.error = "no feasible assignment was evaluated";
    return result;
  }
  result.ok = true;
  return result;
}

std::string tuneTraceCsv(const TuneResult &result) {
  std::ostringstream os;
  os << "iter,assignment,cost,best\n";
  char buf[64];
  for (size_t i = 0; i < result.trace.size(); ++i) {
    const TuneEval &e = result.trace[i];
    os << (i + 1) << ",\"";
    bool first = true;
    for (const auto &[k, v] : e.assignment) {
      if (!first)
        os << " ";
      first = false;
      os << k << "=" << v;
    }
    std::snprintf(buf, sizeof(buf), "%.6g", e.cost);
    os << "\"," << buf;
    std::snprintf(buf, sizeof(buf), "%.6g", e.best_so_far);
    os << "," << buf << "\n";
  }
  return os.str();
}

} // namespace tfc
