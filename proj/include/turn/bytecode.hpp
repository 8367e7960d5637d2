#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "turn/schema.hpp"
#include "turn/value.hpp"

namespace turn {

enum class Op : std::uint8_t {
  // plumbing
  Const,        // a = constant index
  Pop,
  LoadLocal,    // a = slot
  StoreLocal,   // a = slot; pops
  LoadFn,       // a = function index
  LoadSelf,     // the running closure
  MakeClosure,  // a = function index, b = capture count (captures on stack)
  MakeList,     // a = n
  MakeMap,      // a = n pairs (key, value)
  MakeStruct,   // a = struct index, b = n (name, value) pairs
  GetField,     // a = name index
  Index,
  Add, Sub, Mul, Div, Neg, Not,
  CmpLt, CmpLe, CmpGt, CmpGe, CmpEq, CmpNe,
  And, Or,
  Jump,         // a = target
  JumpIfFalse,  // a = target; pops
  Call,         // a = argc; callee below the arguments
  CallTool,     // a = name index, b = argc
  Echo,
  Throw,
  TryPush,      // a = handler target
  TryPop,
  Return,
  Halt,
  // domain
  Infer,        // a = struct index
  Confidence,
  Spawn,        // closure on stack
  SpawnLink,
  SpawnEach,    // list, closure on stack
  Send,
  Receive,
  SelfPid,
  Remember,
  Recall,
  GrantIdentity,  // a = class name index, b = provider name index
  Suspend,
  ContextAppend,
  ContextSystem,
};

std::string_view op_name(Op op);

struct Instruction {
  Op op = Op::Halt;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  int line = 0;
};

struct Function {
  std::string name;
  std::uint32_t arity = 0;
  std::uint32_t slot_count = 0;
  std::vector<std::uint32_t> capture_slots;
  std::vector<Instruction> code;
};

struct Chunk {
  std::string module = "main";
  std::vector<Value> constants;  // Null, Num, Str and Bool only
  std::vector<std::string> names;
  StructRegistry registry;
  std::vector<std::string> schemas;  // canonical schema per struct; empty if not inferable
  std::vector<JsonSchema> schema_json;
  std::vector<Function> functions;   // 0 is the top level
  std::map<std::string, std::uint32_t> exports;
};

// One instruction per line; child functions follow under "== fn" headers.
std::string disassemble(const Chunk& chunk);

// Deterministic byte encoding (used for hashing and determinism checks).
std::string serialize_chunk(const Chunk& chunk);

// Hex SHA-256 of serialize_chunk.
std::string chunk_hash(const Chunk& chunk);

std::string sha256_hex(std::string_view data);

}  // namespace turn
