#include "turn/bytecode.hpp"

#include <cstdio>

#include <openssl/evp.h>

namespace turn {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Const: return "CONST";
    case Op::Pop: return "POP";
    case Op::LoadLocal: return "LOAD_LOCAL";
    case Op::StoreLocal: return "STORE_LOCAL";
    case Op::LoadFn: return "LOAD_FN";
    case Op::LoadSelf: return "LOAD_SELF";
    case Op::MakeClosure: return "MAKE_CLOSURE";
    case Op::MakeList: return "MAKE_LIST";
    case Op::MakeMap: return "MAKE_MAP";
    case Op::MakeStruct: return "MAKE_STRUCT";
    case Op::GetField: return "GET_FIELD";
    case Op::Index: return "INDEX";
    case Op::Add: return "ADD";
    case Op::Sub: return "SUB";
    case Op::Mul: return "MUL";
    case Op::Div: return "DIV";
    case Op::Neg: return "NEG";
    case Op::Not: return "NOT";
    case Op::CmpLt: return "CMP_LT";
    case Op::CmpLe: return "CMP_LE";
    case Op::CmpGt: return "CMP_GT";
    case Op::CmpGe: return "CMP_GE";
    case Op::CmpEq: return "CMP_EQ";
    case Op::CmpNe: return "CMP_NE";
    case Op::And: return "AND";
    case Op::Or: return "OR";
    case Op::Jump: return "JUMP";
    case Op::JumpIfFalse: return "JUMP_IF_FALSE";
    case Op::Call: return "CALL";
    case Op::CallTool: return "CALL_TOOL";
    case Op::Echo: return "ECHO";
    case Op::Throw: return "THROW";
    case Op::TryPush: return "TRY_PUSH";
    case Op::TryPop: return "TRY_POP";
    case Op::Return: return "RETURN";
    case Op::Halt: return "HALT";
    case Op::Infer: return "INFER";
    case Op::Confidence: return "CONFIDENCE";
    case Op::Spawn: return "SPAWN";
    case Op::SpawnLink: return "SPAWN_LINK";
    case Op::SpawnEach: return "SPAWN_EACH";
    case Op::Send: return "SEND";
    case Op::Receive: return "RECEIVE";
    case Op::SelfPid: return "SELF_PID";
    case Op::Remember: return "REMEMBER";
    case Op::Recall: return "RECALL";
    case Op::GrantIdentity: return "GRANT_IDENTITY";
    case Op::Suspend: return "SUSPEND";
    case Op::ContextAppend: return "CONTEXT_APPEND";
    case Op::ContextSystem: return "CONTEXT_SYSTEM";
  }
  return "?";
}

namespace {

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string literal(const Value& v) { return v.is(ValueKind::Str) ? quote(v.as_str()) : render(v); }

std::string addr(std::uint32_t a) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04u", a);
  return buf;
}

std::string operands(const Chunk& c, const Instruction& in) {
  switch (in.op) {
    case Op::Const: return " " + literal(c.constants.at(in.a));
    case Op::LoadLocal:
    case Op::StoreLocal: return " " + std::to_string(in.a);
    case Op::LoadFn: return " " + c.functions.at(in.a).name;
    case Op::MakeClosure: return " " + c.functions.at(in.a).name + " captures=" + std::to_string(in.b);
    case Op::MakeList:
    case Op::MakeMap:
    case Op::Call: return " " + std::to_string(in.a);
    case Op::MakeStruct: return " " + c.registry.all().at(in.a).name + " " + std::to_string(in.b);
    case Op::GetField: return " " + c.names.at(in.a);
    case Op::Jump:
    case Op::JumpIfFalse:
    case Op::TryPush: return " " + addr(in.a);
    case Op::CallTool: return " " + quote(c.names.at(in.a)) + " argc=" + std::to_string(in.b);
    case Op::Infer:
      return " " + c.registry.all().at(in.a).name + " schema=<" + std::to_string(c.schemas.at(in.a).size()) + " bytes>";
    case Op::GrantIdentity: return " " + c.names.at(in.a) + " " + quote(c.names.at(in.b));
    default: return "";
  }
}

nlohmann::ordered_json tagged(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return {{"t", "null"}};
    case ValueKind::Num: return {{"t", "num"}, {"v", format_number(v.as_num())}};
    case ValueKind::Str: return {{"t", "str"}, {"v", v.as_str()}};
    case ValueKind::Bool: return {{"t", "bool"}, {"v", v.as_bool()}};
    default: return {{"t", std::string(kind_name(v.kind()))}};
  }
}

}  // namespace

std::string disassemble(const Chunk& chunk) {
  std::string out;
  for (std::size_t f = 0; f < chunk.functions.size(); ++f) {
    const Function& fn = chunk.functions[f];
    if (f > 0) out += "== fn " + std::to_string(f) + " " + fn.name + " (arity " + std::to_string(fn.arity) + ") ==\n";
    for (std::size_t i = 0; i < fn.code.size(); ++i) {
      out += addr(static_cast<std::uint32_t>(i)) + " ";
      out += op_name(fn.code[i].op);
      out += operands(chunk, fn.code[i]);
      out += '\n';
    }
  }
  return out;
}

std::string serialize_chunk(const Chunk& chunk) {
  nlohmann::ordered_json j;
  j["module"] = chunk.module;
  auto& consts = j["constants"] = nlohmann::ordered_json::array();
  for (const auto& c : chunk.constants) consts.push_back(tagged(c));
  j["names"] = chunk.names;
  auto& structs = j["structs"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < chunk.registry.size(); ++i) {
    const auto& def = chunk.registry.all()[i];
    nlohmann::ordered_json fields = nlohmann::ordered_json::array();
    for (const auto& f : def.fields) fields.push_back({f.name, f.type.name()});
    structs.push_back({{"name", def.name}, {"fields", fields}, {"schema", chunk.schemas.at(i)}});
  }
  auto& fns = j["functions"] = nlohmann::ordered_json::array();
  for (const auto& fn : chunk.functions) {
    nlohmann::ordered_json code = nlohmann::ordered_json::array();
    for (const auto& in : fn.code) code.push_back({op_name(in.op), in.a, in.b, in.line});
    fns.push_back({{"name", fn.name},
                   {"arity", fn.arity},
                   {"slots", fn.slot_count},
                   {"captures", fn.capture_slots},
                   {"code", code}});
  }
  j["exports"] = chunk.exports;
  return j.dump();
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string chunk_hash(const Chunk& chunk) { return sha256_hex(serialize_chunk(chunk)); }

}  // namespace turn
