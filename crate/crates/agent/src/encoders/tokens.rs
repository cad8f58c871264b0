use crate::error::{AgentError, Result};

/// Output tokens of a frozen transformer backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSet {
    pub cls: Vec<f32>,
    pub registers: Vec<Vec<f32>>,
}

impl TokenSet {
    pub fn dim(&self) -> usize {
        self.cls.len()
    }
}

/// CLS alone, or CLS followed by the register tokens in order.
pub fn concat_tokens(tokens: &TokenSet, include_registers: bool) -> Result<Vec<f32>> {
    if !include_registers {
        return Ok(tokens.cls.clone());
    }
    if tokens.registers.is_empty() {
        return Err(AgentError::Invalid(
            "register tokens requested but none present".into(),
        ));
    }
    let mut out = Vec::with_capacity(tokens.cls.len() * (1 + tokens.registers.len()));
    out.extend_from_slice(&tokens.cls);
    for r in &tokens.registers {
        if r.len() != tokens.cls.len() {
            return Err(AgentError::Invalid(
                "register width differs from CLS width".into(),
            ));
        }
        out.extend_from_slice(r);
    }
    Ok(out)
}

/// A frozen image-to-token model run once per environment step.
pub trait Backbone: Send + Sync {
    fn tokens(&self, image: &[u8], resolution: usize) -> Result<TokenSet>;
    fn register_count(&self) -> usize;
    /// SHA-256 of all weights, for freeze checks.
    fn digest(&self) -> String;
}
