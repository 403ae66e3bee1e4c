#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace divlogic {

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatError : public std::runtime_error {
 public:
  ChatError(const std::string& what, bool transient, int status = 0)
      : std::runtime_error(what), transient_(transient), status_(status) {}
  bool transient() const { return transient_; }
  int status() const { return status_; }

 private:
  bool transient_;
  int status_;
};

/// A chat-completion endpoint. Implementations throw ChatError.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

}  // namespace divlogic
