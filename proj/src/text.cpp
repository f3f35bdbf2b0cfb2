//===- text.cpp - Textual format: lexer, parser, printer ------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "tfc/text.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace tfc {

namespace {

//===----------------------------------------------------------------------===//
// Lexer
//===----------------------------------------------------------------------===//

enum class Tok {
  Eof,
  Ident,      // opnames, attr keys, type words
  Percent,    // %name (text = name)
  At,         // @name
  Caret,      // ^name
  Int,
  Float,
  Str,
  TypeLit,    // memref<...>, !any, !op<...>, !param (raw text)
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Comma, Equal, Colon, Question,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  std::int64_t int_val = 0;
  double float_val = 0;
  Location loc;
};

class Lexer {
public:
  Lexer(const std::string &src, const std::string &file, DiagnosticList &diags)
      : src_(src), file_(file), diags_(diags) {}

  Token next() {
    skipWhitespaceAndComments();
    Token t;
    t.loc = {line_, col_};
    if (pos_ >= src_.size()) {
      t.kind = Tok::Eof;
      return t;
    }
    char c = src_[pos_];
    switch (c) {
    case '(': return punct(Tok::LParen);
    case ')': return punct(Tok::RParen);
    case '{': return punct(Tok::LBrace);
    case '}': return punct(Tok::RBrace);
    case '[': return punct(Tok::LBracket);
    case ']': return punct(Tok::RBracket);
    case ',': return punct(Tok::Comma);
    case '=': return punct(Tok::Equal);
    case ':': return punct(Tok::Colon);
    case '?': return punct(Tok::Question);
    default: break;
    }
    if (c == '%' || c == '@' || c == '^') {
      advance();
      Token t2;
      t2.loc = t.loc;
      t2.kind = c == '%' ? Tok::Percent : (c == '@' ? Tok::At : Tok::Caret);
      t2.text = lexIdentBody();
      if (t2.text.empty())
        diags_.error("expected identifier after '" + std::string(1, c) + "'",
                     t.loc, file_);
      return t2;
    }
    if (c == '"')
      return lexString(t.loc);
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c)))
      return lexNumber(t.loc);
    if (c == '!')
      return lexBangType(t.loc);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      t.text = lexIdentBody();
      if (t.text == "memref" && peekNonSpace() == '<') {
        t.kind = Tok::TypeLit;
        t.text += lexAngled();
      }
      return t;
    }
    diags_.error("unexpected character '" + std::string(1, c) + "'", t.loc, file_);
    advance();
    return next();
  }

private:
  void advance() {
    if (pos_ < src_.size()) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skipWhitespaceAndComments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          advance();
      } else {
        break;
      }
    }
  }

  Token punct(Tok kind) {
    Token t;
    t.loc = {line_, col_};
    t.kind = kind;
    t.text = std::string(1, src_[pos_]);
    advance();
    return t;
  }

  std::string lexIdentBody() {
    std::string s;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
          c == '-' || c == '*' || c == '$') {
        s += c;
        advance();
      } else {
        break;
      }
    }
    return s;
  }

  char peekNonSpace() const {
    size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t'))
      ++p;
    return p < src_.size() ? src_[p] : '\0';
  }

  // Consume a balanced <...> chunk including the angle brackets.
  std::string lexAngled() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t'))
      advance();
    std::string s;
    int depth = 0;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      s += c;
      advance();
      if (c == '<')
        ++depth;
      else if (c == '>' && --depth == 0)
        break;
    }
    return s;
  }

  Token lexBangType(Location loc) {
    advance(); // '!'
    Token t;
    t.loc = loc;
    t.kind = Tok::TypeLit;
    t.text = "!" + lexIdentBody();
    if (t.text == "!op" && peekNonSpace() == '<')
      t.text += lexAngled();
    return t;
  }

  Token lexString(Location loc) {
    Token t;
    t.loc = loc;
    t.kind = Tok::Str;
    advance(); // opening quote
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size()) {
        advance();
        char e = src_[pos_];
        t.text += e == 'n' ? '\n' : e;
      } else {
        t.text += c;
      }
      advance();
    }
    if (pos_ >= src_.size())
      diags_.error("unterminated string literal", loc, file_);
    else
      advance(); // closing quote
    return t;
  }

  Token lexNumber(Location loc) {
    Token t;
    t.loc = loc;
    std::string s;
    if (src_[pos_] == '-') {
      s += '-';
      advance();
    }
    bool is_float = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        s += c;
        advance();
      } else if (c == '.' && !is_float) {
        is_float = true;
        s += c;
        advance();
      } else if ((c == 'e' || c == 'E') && pos_ + 1 < src_.size() &&
                 (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) ||
                  src_[pos_ + 1] == '-' || src_[pos_ + 1] == '+')) {
        is_float = true;
        s += c;
        advance();
        if (src_[pos_] == '-' || src_[pos_] == '+') {
          s += src_[pos_];
          advance();
        }
      } else {
        break;
      }
    }
    if (is_float) {
      t.kind = Tok::Float;
      t.float_val = std::strtod(s.c_str(), nullptr);
    } else {
      t.kind = Tok::Int;
      t.int_val = std::strtoll(s.c_str(), nullptr, 10);
    }
    t.text = s;
    return t;
  }

  const std::string &src_;
  std::string file_;
  DiagnosticList &diags_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

//===----------------------------------------------------------------------===//
// Type parsing
//===----------------------------------------------------------------------===//

std::vector<std::string> splitTrim(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '[' || c == '<')
      ++depth;
    if (c == ']' || c == '>')
      --depth;
    if (c == sep && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  for (auto &p : parts) {
    while (!p.empty() && (p.front() == ' ' || p.front() == '\t'))
      p.erase(p.begin());
    while (!p.empty() && (p.back() == ' ' || p.back() == '\t'))
      p.pop_back();
  }
  return parts;
}

std::optional<std::int64_t> parseDim(const std::string &s) {
  if (s == "?")
    return kDynamic;
  if (s.empty())
    return std::nullopt;
  char *end = nullptr;
  std::int64_t v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size())
    return std::nullopt;
  return v;
}

} // namespace

std::optional<Type> parseTypeString(const std::string &text) {
  if (text == "index")
    return Type::index();
  if (text == "i1")
    return Type::i1();
  if (text == "i64")
    return Type::i64();
  if (text == "f64")
    return Type::f64();
  if (text == "!any")
    return Type::anyHandle();
  if (text == "!param")
    return Type::param();
  if (text.rfind("!op<", 0) == 0 && text.back() == '>') {
    std::string inner = text.substr(4, text.size() - 5);
    std::vector<std::string> atoms;
    for (auto &a : splitTrim(inner, ','))
      if (!a.empty())
        atoms.push_back(a);
    return Type::handle(atoms);
  }
  if (text.rfind("memref<", 0) == 0 && text.back() == '>') {
    std::string inner = text.substr(7, text.size() - 8);
    auto parts = splitTrim(inner, ',');
    // parts[0] = dims x elem; optional "offset: X" and "strides: [...]".
    auto dims = splitTrim(parts[0], 'x');
    if (dims.empty())
      return std::nullopt;
    std::string elem_s = dims.back();
    dims.pop_back();
    TypeKind elem;
    if (elem_s == "f64")
      elem = TypeKind::F64;
    else if (elem_s == "i64")
      elem = TypeKind::I64;
    else if (elem_s == "index")
      elem = TypeKind::Index;
    else
      return std::nullopt;
    std::vector<std::int64_t> shape;
    for (auto &d : dims) {
      auto v = parseDim(d);
      if (!v)
        return std::nullopt;
      shape.push_back(*v);
    }
    Type t = Type::memref(shape, elem);
    for (size_t i = 1; i < parts.size(); ++i) {
      const std::string &p = parts[i];
      if (p.rfind("offset:", 0) == 0) {
        auto v = parseDim(splitTrim(p.substr(7), ',')[0]);
        if (!v)
          return std::nullopt;
        t.explicit_layout = true;
        t.layout_offset = *v;
      } else if (p.rfind("strides:", 0) == 0) {
        std::string body = p.substr(8);
        while (!body.empty() && (body.front() == ' ' || body.front() == '['))
          body.erase(body.begin());
        while (!body.empty() && (body.back() == ' ' || body.back() == ']'))
          body.pop_back();
        t.explicit_layout = true;
        for (auto &d : splitTrim(body, ',')) {
          auto v = parseDim(d);
          if (!v)
            return std::nullopt;
          t.layout_strides.push_back(*v);
        }
      } else {
        return std::nullopt;
      }
    }
    if (t.explicit_layout && t.layout_strides.empty())
      t.layout_strides = t.contiguousStrides();
    return t;
  }
  return std::nullopt;
}

namespace {

//===----------------------------------------------------------------------===//
// Parser
//===----------------------------------------------------------------------===//

class Parser {
public:
  Parser(const std::string &src, const DialectRegistry &reg,
         const std::string &file, DiagnosticList &diags)
      : reg_(reg), file_(file), diags_(diags), lex_(src, file, diags) {
    cur_ = lex_.next();
    ahead_ = lex_.next();
    ahead2_ = lex_.next();
  }

  std::optional<Module> parseModule() {
    Module m;
    m.filename = file_;
    std::vector<Operation> top;
    while (cur_.kind != Tok::Eof) {
      auto op = parseOp();
      if (!op)
        return std::nullopt;
      top.push_back(std::move(*op));
      if (diags_.hasErrors())
        return std::nullopt;
    }
    if (top.size() == 1 && top[0].name == "builtin.module") {
      m.root = std::move(top[0]);
    } else {
      m.root.name = "builtin.module";
      m.root.regions.emplace_back();
      m.root.regions[0].blocks.emplace_back();
      m.root.regions[0].blocks[0].ops = std::move(top);
    }
    assignIdsAndCounters(m);
    if (!resolveResultTypes(m))
      return std::nullopt;
    return m;
  }

private:
  void bump() {
    cur_ = ahead_;
    ahead_ = ahead2_;
    ahead2_ = lex_.next();
  }

  bool expect(Tok kind, const char *what) {
    if (cur_.kind != kind) {
      diags_.error(std::string("expected ") + what + ", got '" + cur_.text + "'",
                   cur_.loc, file_);
      return false;
    }
    bump();
    return true;
  }

  std::optional<Operation> parseOp() {
    Operation op;
    // Result list.
    if (cur_.kind == Tok::Percent) {
      std::vector<std::string> names;
      names.push_back(cur_.text);
      bump();
      while (cur_.kind == Tok::Comma) {
        bump();
        if (cur_.kind != Tok::Percent) {
          diags_.error("expected result name", cur_.loc, file_);
          return std::nullopt;
        }
        names.push_back(cur_.text);
        bump();
      }
      if (!expect(Tok::Equal, "'='"))
        return std::nullopt;
      for (auto &n : names)
        op.results.push_back({n, Type::none()});
    }
    if (cur_.kind != Tok::Ident) {
      diags_.error("expected op name, got '" + cur_.text + "'", cur_.loc, file_);
      return std::nullopt;
    }
    op.name = cur_.text;
    op.loc = cur_.loc;
    bump();

    // Optional @symbol sugar.
    if (cur_.kind == Tok::At) {
      const OpDefinition *d = reg_.lookup(op.name);
      std::string key = d && !d->symbol_attr.empty() ? d->symbol_attr : "sym_name";
      op.attrs[key] = AttrValue::makeSym(cur_.text);
      bump();
    }

    // Operands.
    if (cur_.kind == Tok::LParen) {
      bump();
      while (cur_.kind != Tok::RParen) {
        if (cur_.kind != Tok::Percent) {
          diags_.error("expected operand name", cur_.loc, file_);
          return std::nullopt;
        }
        op.operands.push_back(cur_.text);
        bump();
        if (cur_.kind == Tok::Comma)
          bump();
        else
          break;
      }
      if (!expect(Tok::RParen, "')'"))
        return std::nullopt;
    }

    // Successors.
    if (cur_.kind == Tok::LBracket) {
      bump();
      while (cur_.kind != Tok::RBracket) {
        if (cur_.kind != Tok::Caret) {
          diags_.error("expected block label", cur_.loc, file_);
          return std::nullopt;
        }
        op.successors.push_back(cur_.text);
        bump();
        if (cur_.kind == Tok::Comma)
          bump();
      }
      if (!expect(Tok::RBracket, "']'"))
        return std::nullopt;
    }

    // Attribute dictionary: '{' ident '=' distinguishes it from a region.
    if (cur_.kind == Tok::LBrace && peekIsAttrDict()) {
      if (!parseAttrDict(op))
        return std::nullopt;
    }

    // Type clause.
    if (cur_.kind == Tok::Colon) {
      bump();
      std::vector<Type> types;
      if (cur_.kind == Tok::LParen) {
        bump();
        while (cur_.kind != Tok::RParen) {
          auto t = parseType();
          if (!t)
            return std::nullopt;
          types.push_back(*t);
          if (cur_.kind == Tok::Comma)
            bump();
        }
        if (!expect(Tok::RParen, "')'"))
          return std::nullopt;
      } else {
        auto t = parseType();
        if (!t)
          return std::nullopt;
        types.push_back(*t);
      }
      if (types.size() != op.results.size()) {
        diags_.error("type clause lists " + std::to_string(types.size()) +
                         " types for " + std::to_string(op.results.size()) +
                         " results",
                     op.loc, file_);
        return std::nullopt;
      }
      for (size_t i = 0; i < types.size(); ++i)
        op.results[i].type = types[i];
    }

    // Regions.
    while (cur_.kind == Tok::LBrace) {
      auto r = parseRegion();
      if (!r)
        return std::nullopt;
      op.regions.push_back(std::move(*r));
    }

    // Pull the reserved `segments` key into the dedicated field.
    auto it = op.attrs.find("segments");
    if (it != op.attrs.end()) {
      if (it->second.kind == AttrValue::Kind::IntList)
        op.segments = it->second.asIntList();
      op.attrs.erase(it);
    }
    return op;
  }

  // After '{', an attr dict continues "ident =". An op inside a region is
  // never followed by '=' at that position, and empty braces are treated as
  // an empty region.
  bool peekIsAttrDict() {
    return ahead_.kind == Tok::Ident && ahead2_.kind == Tok::Equal;
  }

  bool parseAttrDict(Operation &op) {
    // cur_ == '{', ahead_ == Ident. Look one more token ahead by trying to
    // parse; a region body op would not be followed by '='.
    // We parse speculatively: grab key, then require '='.
    bump(); // '{'
    while (cur_.kind != Tok::RBrace) {
      if (cur_.kind != Tok::Ident) {
        diags_.error("expected attribute key", cur_.loc, file_);
        return false;
      }
      std::string key = cur_.text;
      bump();
      if (!expect(Tok::Equal, "'=' in attribute"))
        return false;
      auto v = parseAttrValue();
      if (!v)
        return false;
      op.attrs[key] = std::move(*v);
      if (cur_.kind == Tok::Comma)
        bump();
    }
    bump(); // '}'
    return true;
  }

  std::optional<AttrValue> parseAttrValue() {
    switch (cur_.kind) {
    case Tok::Int: {
      auto v = AttrValue::makeInt(cur_.int_val);
      bump();
      return v;
    }
    case Tok::Float: {
      auto v = AttrValue::makeFloat(cur_.float_val);
      bump();
      return v;
    }
    case Tok::Str: {
      auto v = AttrValue::makeStr(cur_.text);
      bump();
      return v;
    }
    case Tok::At: {
      auto v = AttrValue::makeSym(cur_.text);
      bump();
      return v;
    }
    case Tok::Question:
      bump();
      return AttrValue::makeInt(kDynamic);
    case Tok::Ident: {
      if (cur_.text == "true" || cur_.text == "false") {
        auto v = AttrValue::makeBool(cur_.text == "true");
        bump();
        return v;
      }
      diags_.error("unexpected attribute value '" + cur_.text + "'", cur_.loc,
                   file_);
      return std::nullopt;
    }
    case Tok::LBracket: {
      bump();
      std::vector<std::int64_t> ints;
      std::vector<std::string> strs;
      bool is_str = false;
      bool any = false;
      while (cur_.kind != Tok::RBracket) {
        any = true;
        if (cur_.kind == Tok::Int) {
          ints.push_back(cur_.int_val);
          bump();
        } else if (cur_.kind == Tok::Question) {
          ints.push_back(kDynamic);
          bump();
        } else if (cur_.kind == Tok::Str) {
          is_str = true;
          strs.push_back(cur_.text);
          bump();
        } else {
          diags_.error("unexpected list element '" + cur_.text + "'", cur_.loc,
                       file_);
          return std::nullopt;
        }
        if (cur_.kind == Tok::Comma)
          bump();
      }
      if (!expect(Tok::RBracket, "']'"))
        return std::nullopt;
      (void)any;
      if (is_str)
        return AttrValue::makeStrList(std::move(strs));
      return AttrValue::makeIntList(std::move(ints));
    }
    default:
      diags_.error("unexpected attribute value '" + cur_.text + "'", cur_.loc,
                   file_);
      return std::nullopt;
    }
  }

  std::optional<Type> parseType() {
    if (cur_.kind == Tok::TypeLit || cur_.kind == Tok::Ident) {
      auto t = parseTypeString(cur_.text);
      if (!t) {
        diags_.error("unknown type '" + cur_.text + "'", cur_.loc, file_);
        return std::nullopt;
      }
      bump();
      return t;
    }
    diags_.error("expected a type, got '" + cur_.text + "'", cur_.loc, file_);
    return std::nullopt;
  }

  std::optional<Region> parseRegion() {
    bump(); // '{'
    Region region;
    if (cur_.kind == Tok::Caret) {
      while (cur_.kind == Tok::Caret) {
        Block b;
        b.label = cur_.text;
        bump();
        if (cur_.kind == Tok::LParen) {
          bump();
          while (cur_.kind != Tok::RParen) {
            if (cur_.kind != Tok::Percent) {
              diags_.error("expected block argument", cur_.loc, file_);
              return std::nullopt;
            }
            std::string name = cur_.text;
            bump();
            if (!expect(Tok::Colon, "':' in block argument"))
              return std::nullopt;
            auto t = parseType();
            if (!t)
              return std::nullopt;
            b.args.push_back({name, *t});
            if (cur_.kind == Tok::Comma)
              bump();
          }
          if (!expect(Tok::RParen, "')'"))
            return std::nullopt;
        }
        if (!expect(Tok::Colon, "':' after block label"))
          return std::nullopt;
        while (cur_.kind != Tok::Caret && cur_.kind != Tok::RBrace &&
               cur_.kind != Tok::Eof) {
          auto op = parseOp();
          if (!op)
            return std::nullopt;
          b.ops.push_back(std::move(*op));
        }
        region.blocks.push_back(std::move(b));
      }
    } else {
      Block b;
      while (cur_.kind != Tok::RBrace && cur_.kind != Tok::Eof) {
        auto op = parseOp();
        if (!op)
          return std::nullopt;
        b.ops.push_back(std::move(*op));
      }
      region.blocks.push_back(std::move(b));
    }
    if (!expect(Tok::RBrace, "'}'"))
      return std::nullopt;
    return region;
  }

  void assignIdsAndCounters(Module &m) {
    walk(m.root, [&](Operation &op) {
      op.id = m.newOpId();
      auto bumpCounter = [&m](const std::string &name) {
        auto bumpIf = [&](const char *prefix, std::uint64_t &counter) {
          size_t plen = std::string(prefix).size();
          if (name.rfind(prefix, 0) != 0 || name.size() == plen)
            return;
          for (size_t i = plen; i < name.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i])))
              return;
          counter = std::max<std::uint64_t>(
              counter, std::strtoull(name.c_str() + plen, nullptr, 10) + 1);
        };
        bumpIf("t", m.next_value);
      };
      for (const auto &res : op.results)
        bumpCounter(res.name);
      for (auto &r : op.regions)
        for (auto &b : r.blocks) {
          for (const auto &arg : b.args)
            bumpCounter(arg.name);
          if (!b.label.empty() && b.label.rfind("bb", 0) == 0) {
            bool digits = b.label.size() > 2;
            for (size_t i = 2; i < b.label.size(); ++i)
              if (!std::isdigit(static_cast<unsigned char>(b.label[i])))
                digits = false;
            if (digits)
              m.next_block = std::max<std::uint64_t>(
                  m.next_block, std::strtoull(b.label.c_str() + 2, nullptr, 10) + 1);
          }
        }
      return true;
    });
  }

  bool resolveResultTypes(Module &m) {
    std::map<std::string, Type> types;
    bool ok = true;
    walk(m.root, [&](Operation &op) {
      // Block args first: nested ops may use them.
      for (auto &r : op.regions)
        for (auto &b : r.blocks)
          for (auto &arg : b.args)
            types[arg.name] = arg.type;
      const OpDefinition *d = reg_.lookup(op.name);
      for (auto &res : op.results) {
        if (res.type.kind != TypeKind::None) {
          types[res.name] = res.type;
          continue;
        }
        ResultRule rule = d ? d->result_rule : ResultRule::FromClause;
        switch (rule) {
        case ResultRule::Index:
          res.type = Type::index();
          break;
        case ResultRule::I1:
          res.type = Type::i1();
          break;
        case ResultRule::SameAsFirstOperand:
          // An unknown operand here is a dominance problem; leave the type
          // unresolved and let the verifier report it.
          if (!op.operands.empty() && types.count(op.operands[0]))
            res.type = types[op.operands[0]];
          break;
        case ResultRule::ElementOfMemRef: {
          Type mt = !op.operands.empty() && types.count(op.operands[0])
                        ? types[op.operands[0]]
                        : Type::none();
          if (mt.kind == TypeKind::MemRef)
            res.type = Type::ofKind(mt.elem);
          break;
        }
        case ResultRule::None:
        case ResultRule::FromClause:
          if (d && d->result_rule == ResultRule::FromClause) {
            diags_.error("'" + op.name + "' needs an explicit ':' type clause",
                         op.loc, file_);
            ok = false;
          } else {
            // Unknown or handle-producing op; the script verifier fills
            // transform handle types in.
            res.type = Type::anyHandle();
          }
          break;
        }
        types[res.name] = res.type;
      }
      return true;
    });
    return ok;
  }

  const DialectRegistry &reg_;
  std::string file_;
  DiagnosticList &diags_;
  Lexer lex_;
  Token cur_, ahead_, ahead2_;
};

} // namespace

ParseResult parseModuleText(const std::string &text, const DialectRegistry &reg,
                            const std::string &filename) {
  ParseResult result;
  Parser p(text, reg, filename, result.diags);
  result.module = p.parseModule();
  if (result.diags.hasErrors())
    result.module.reset();
  return result;
}

ParseResult parsePayload(const std::string &text, const DialectRegistry &reg,
                         const std::string &filename) {
  ParseResult result = parseModuleText(text, reg, filename);
  if (!result.module)
    return result;
  DiagnosticList vdiags = verifyModule(*result.module, reg);
  for (auto &d : vdiags.items)
    result.diags.items.push_back(d);
  if (result.diags.hasErrors())
    result.module.reset();
  return result;
}

//===----------------------------------------------------------------------===//
// Printer
//===----------------------------------------------------------------------===//

namespace {

void printOpInto(std::ostringstream &os, const Operation &op,
                 const DialectRegistry &reg, int indent);

void printRegion(std::ostringstream &os, const Region &r,
                 const DialectRegistry &reg, int indent) {
  bool trivial = r.blocks.size() == 1 && r.blocks[0].label.empty() &&
                 r.blocks[0].args.empty();
  if (trivial && r.blocks[0].ops.empty()) {
    os << " { }";
    return;
  }
  os << " {\n";
  std::string pad(indent + 2, ' ');
  for (const auto &b : r.blocks) {
    if (!trivial) {
      os << std::string(indent, ' ') << "^" << b.label;
      if (!b.args.empty()) {
        os << "(";
        for (size_t i = 0; i < b.args.size(); ++i) {
          if (i)
            os << ", ";
          os << "%" << b.args[i].name << ": " << b.args[i].type.str();
        }
        os << ")";
      }
      os << ":\n";
    }
    for (const auto &o : b.ops) {
      os << pad;
      printOpInto(os, o, reg, indent + 2);
      os << "\n";
    }
  }
  os << std::string(indent, ' ') << "}";
}

void printOpInto(std::ostringstream &os, const Operation &op,
                 const DialectRegistry &reg, int indent) {
  if (!op.results.empty()) {
    for (size_t i = 0; i < op.results.size(); ++i) {
      if (i)
        os << ", ";
      os << "%" << op.results[i].name;
    }
    os << " = ";
  }
  os << op.name;

  const OpDefinition *d = reg.lookup(op.name);
  std::string sugar_key = d && !d->symbol_attr.empty() ? d->symbol_attr : "";
  if (!sugar_key.empty()) {
    if (const AttrValue *sym = op.attr(sugar_key);
        sym && sym->kind == AttrValue::Kind::Sym)
      os << " @" << sym->asStr();
    else
      sugar_key.clear();
  }

  if (!op.operands.empty()) {
    os << "(";
    for (size_t i = 0; i < op.operands.size(); ++i) {
      if (i)
        os << ", ";
      os << "%" << op.operands[i];
    }
    os << ")";
  }

  if (!op.successors.empty()) {
    os << " [";
    for (size_t i = 0; i < op.successors.size(); ++i) {
      if (i)
        os << ", ";
      os << "^" << op.successors[i];
    }
    os << "]";
  }

  // Attr dict including segments, sorted by key.
  AttrMap printable = op.attrs;
  if (!sugar_key.empty())
    printable.erase(sugar_key);
  if (op.segments)
    printable["segments"] = AttrValue::makeIntList(*op.segments);
  if (!printable.empty()) {
    os << " {";
    bool first = true;
    for (const auto &[k, v] : printable) {
      if (!first)
        os << ", ";
      first = false;
      os << k << " = " << v.str();
    }
    os << "}";
  }

  // Type clause for ops whose results are not inferrable.
  bool needs_clause =
      !op.results.empty() &&
      (!d || d->result_rule == ResultRule::FromClause || d->variadic_results);
  if (needs_clause) {
    os << " : ";
    if (op.results.size() > 1) {
      os << "(";
      for (size_t i = 0; i < op.results.size(); ++i) {
        if (i)
          os << ", ";
        os << op.results[i].type.str();
      }
      os << ")";
    } else {
      os << op.results[0].type.str();
    }
  }

  for (const auto &r : op.regions)
    printRegion(os, r, reg, indent);
}

} // namespace

std::string printOp(const Operation &op, const DialectRegistry &reg, int indent) {
  std::ostringstream os;
  os << std::string(indent, ' ');
  printOpInto(os, op, reg, indent);
  return os.str();
}

std::string printModule(const Module &m, const DialectRegistry &reg) {
  return printOp(m.root, reg) + "\n";
}

} // namespace tfc
