//===- text.hpp - Textual format: parser and printer ----------------------===//
//
// Licensed under the Apache License, Version 2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// One generic one-op-per-line syntax serves every dialect, including the
// transform dialect:
//
//   op     := [results "="] opname [@symbol] ["(" operands ")"]
//             ["[" successors "]"] [attr-dict] [":" types] {region}
//   region := "{" (ops | labeled-blocks) "}"
//
// Value names are %ident, symbols @ident, block labels ^ident. Attribute
// dictionaries are {key = value, ...}. Dynamic dimensions print as `?`.
//
//===----------------------------------------------------------------------===//

#ifndef TFC_TEXT_HPP
#define TFC_TEXT_HPP

#include "tfc/dialects.hpp"
#include "tfc/ir.hpp"

namespace tfc {

struct ParseResult {
  std::optional<Module> module;
  DiagnosticList diags;
  bool ok() const { return module.has_value() && !diags.hasErrors(); }
};

// Parses and resolves result types against the registry. Does not run the
// structural verifier; parsePayload below does.
ParseResult parseModuleText(const std::string &text, const DialectRegistry &reg,
                            const std::string &filename = "<memory>");

// Parse + verify. The returned module is wrapped in builtin.module when the
// source lists top-level ops directly.
ParseResult parsePayload(const std::string &text, const DialectRegistry &reg,
                         const std::string &filename = "<memory>");

std::string printOp(const Operation &op, const DialectRegistry &reg, int indent = 0);
std::string printModule(const Module &m, const DialectRegistry &reg);

// Standalone type parser, e.g. "memref<64x64xf64, offset: ?, strides: [64, 1]>".
std::optional<Type> parseTypeString(const std::string &text);

} // namespace tfc

#endif // TFC_TEXT_HPP
