#include "turn/context.hpp"

namespace turn {

void StructuredContext::system(std::string directive) { p0_.push_back(std::move(directive)); }

void StructuredContext::append(std::string item) {
  if (!p1_.empty() && p1_.size() >= w_) {
    p2_.push_back(std::move(p1_.front()));
    p1_.pop_front();
    if (p2_.size() > 2 * w_) p2_.pop_front();
  }
  p1_.push_back(std::move(item));
}

std::vector<std::string> StructuredContext::to_flat_vec() const {
  std::vector<std::string> out;
  out.reserve(size());
  out.insert(out.end(), p0_.begin(), p0_.end());
  out.insert(out.end(), p2_.begin(), p2_.end());
  out.insert(out.end(), p1_.begin(), p1_.end());
  return out;
}

StructuredContext StructuredContext::restore(std::vector<std::string> p0, std::deque<std::string> p2,
                                             std::deque<std::string> p1, std::size_t working_capacity) {
  StructuredContext c(working_capacity);
  c.p0_ = std::move(p0);
  c.p2_ = std::move(p2);
  c.p1_ = std::move(p1);
  return c;
}

}  // namespace turn
