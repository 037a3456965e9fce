use std::fmt;

use crate::types::Topic;

const SEPARATOR: &str = ", ";

/// The whole topic rendered as one comma-separated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopicSentence(String);

impl TopicSentence {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for TopicSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn build_sentence(topic: &Topic) -> TopicSentence {
    TopicSentence(topic.words().join(SEPARATOR))
}
