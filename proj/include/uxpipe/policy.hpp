#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "uxpipe/image.hpp"

namespace uxpipe {

struct TextPart {
  std::string text;
};

struct ImagePart {
  std::shared_ptr<const Screenshot> image;
};

using ContentPart = std::variant<TextPart, ImagePart>;

struct ChatMessage {
  std::string role;  // system, user, assistant
  std::vector<ContentPart> content;

  static ChatMessage text(std::string role, std::string body) {
    return {std::move(role), {TextPart{std::move(body)}}};
  }

  std::string joined_text() const {
    std::string out;
    for (const auto& part : content)
      if (const auto* t = std::get_if<TextPart>(&part)) out += t->text;
    return out;
  }

  std::size_t image_count() const {
    std::size_t n = 0;
    for (const auto& part : content) n += std::holds_alternative<ImagePart>(part);
    return n;
  }
};

// Maps a conversation to the assistant's reply text. Throws TransportError
// when the backing model cannot be reached.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string generate(std::span<const ChatMessage> messages) = 0;
};

}  // namespace uxpipe
